use std::fs;

use gsbf_core::harness::{
    export, load_config, read_records, run_trials, summarize, trace_file_name, ExperimentConfig,
    Method, TrialStatus, RECORDS_FILE, TRACE_DIR,
};
use gsbf_core::Error;

fn small(methods: Vec<Method>) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::default();
    cfg.network.num_bs = 2;
    cfg.network.num_users = 3;
    cfg.experiment.sinr_sweep_db = vec![0.0, 3.0];
    cfg.experiment.trials = 2;
    cfg.experiment.base_seed = 40;
    cfg.experiment.methods = methods;
    cfg
}

#[test]
fn record_count_and_pairing() {
    let cfg = small(vec![Method::Logsum, Method::Cb]);
    let seen = std::sync::Mutex::new(0usize);
    let out = run_trials(&cfg, |_| *seen.lock().unwrap() += 1).unwrap();
    assert_eq!(out.len(), 2 * 2 * 2);
    assert_eq!(*seen.lock().unwrap(), out.len());
    let seeds: Vec<u64> = out.iter().map(|o| o.record.seed).collect();
    assert_eq!(seeds, vec![40, 40, 41, 41, 40, 40, 41, 41]);
    for pair in out.chunks(2) {
        let (ls, cb) = (&pair[0].record, &pair[1].record);
        assert_eq!((ls.method, cb.method), (Method::Logsum, Method::Cb));
        assert_eq!(ls.seed, cb.seed);
        assert_eq!(ls.status, TrialStatus::Ok);
        assert_eq!(cb.task_count, Some(6));
        assert!(cb.transmit_w.unwrap() <= ls.transmit_w.unwrap() + 1e-6);
        assert!(pair[0].trace.is_some() && pair[1].trace.is_none());
        assert_eq!(ls.iterations, pair[0].trace.as_ref().unwrap().iterations());
    }
}

#[test]
fn reruns_are_identical_apart_from_timing() {
    let cfg = small(vec![Method::Logsum, Method::MixedL12]);
    let strip = |cfg: &ExperimentConfig| {
        run_trials(cfg, |_| {})
            .unwrap()
            .into_iter()
            .map(|mut o| {
                o.record.wall_ms = 0.0;
                (o.record, o.trace.map(|t| t.omegas()))
            })
            .collect::<Vec<_>>()
    };
    let mut parallel = cfg.clone();
    parallel.experiment.workers = 3;
    assert_eq!(strip(&cfg), strip(&parallel));
}

#[test]
fn export_round_trip_and_byte_identical_traces() {
    let cfg = small(vec![Method::Logsum, Method::Cb]);
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let out = run_trials(&cfg, |_| {}).unwrap();
    export(&out, a.path()).unwrap();
    export(&run_trials(&cfg, |_| {}).unwrap(), b.path()).unwrap();

    let records = read_records(&a.path().join(RECORDS_FILE)).unwrap();
    let original: Vec<_> = out.iter().map(|o| o.record.clone()).collect();
    assert_eq!(records, original);

    let text = fs::read_to_string(a.path().join(RECORDS_FILE)).unwrap();
    assert!(text.starts_with(
        "seed,sinr_db,method,total_w,transmit_w,compute_w,task_count,iterations,status,wall_ms\n"
    ));
    assert!(!text.contains('\r'));

    for o in out.iter().filter(|o| o.trace.is_some()) {
        let name = trace_file_name(&o.record);
        let bytes = fs::read(a.path().join(TRACE_DIR).join(&name)).unwrap();
        assert_eq!(bytes, fs::read(b.path().join(TRACE_DIR).join(&name)).unwrap());
        let text = String::from_utf8(bytes).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("iteration,omega,delta_g,displacement,residual_bound"));
        assert_eq!(lines.count(), o.record.iterations + 1);
    }
}

#[test]
fn trace_values_reparse_exactly() {
    let cfg = small(vec![Method::Logsum]);
    let dir = tempfile::tempdir().unwrap();
    let out = run_trials(&cfg, |_| {}).unwrap();
    export(&out, dir.path()).unwrap();
    let trace = out[0].trace.as_ref().unwrap();
    let path = dir.path().join(TRACE_DIR).join(trace_file_name(&out[0].record));
    let mut reader = csv::Reader::from_path(path).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows[0][1].parse::<f64>().unwrap(), trace.initial_omega);
    assert_eq!(&rows[0][2], "");
    for (row, rec) in rows[1..].iter().zip(&trace.records) {
        assert_eq!(row[1].parse::<f64>().unwrap(), rec.omega);
        assert_eq!(row[2].parse::<f64>().unwrap(), rec.model_reduction);
        assert_eq!(row[3].parse::<f64>().unwrap(), rec.displacement);
        assert_eq!(row[4].parse::<f64>().unwrap(), rec.residual_bound);
    }
}

#[test]
fn summary_of_cb_counts_every_task() {
    let cfg = small(vec![Method::Cb, Method::Oracle]);
    let records: Vec<_> = run_trials(&cfg, |_| {}).unwrap().into_iter().map(|o| o.record).collect();
    let rows = summarize(&records);
    assert_eq!(rows.len(), 4);
    for r in rows.iter().filter(|r| r.method == Method::Cb) {
        assert_eq!(r.mean_task_count, 6.0);
        assert_eq!(r.std_task_count, 0.0);
    }
    for db in [0.0, 3.0] {
        let get = |m| rows.iter().find(|r| r.sinr_db == db && r.method == m).unwrap();
        assert!(get(Method::Oracle).mean_total_w <= get(Method::Cb).mean_total_w + 1e-5);
    }
}

#[test]
fn infeasible_trials_are_recorded() {
    let mut cfg = small(vec![Method::Logsum, Method::Cb]);
    cfg.experiment.sinr_sweep_db = vec![40.0];
    let out = run_trials(&cfg, |_| {}).unwrap();
    assert_eq!(out.len(), 4);
    for o in &out {
        assert_eq!(o.record.status, TrialStatus::Infeasible);
        assert_eq!(o.record.total_w, None);
    }
    let rows = summarize(&out.iter().map(|o| o.record.clone()).collect::<Vec<_>>());
    assert!(rows.iter().all(|r| r.ok_trials == 0 && r.mean_total_w.is_nan()));
}

#[test]
fn shared_topology_changes_only_fading() {
    let mut cfg = small(vec![Method::Cb]);
    cfg.network.resample_topology = false;
    let a = run_trials(&cfg, |_| {}).unwrap();
    cfg.network.resample_topology = true;
    let b = run_trials(&cfg, |_| {}).unwrap();
    // trial 0 uses base_seed for both placement modes
    assert_eq!(a[0].record.total_w, b[0].record.total_w);
    assert_ne!(a[1].record.total_w, b[1].record.total_w);
}

#[test]
fn load_config_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("exp.toml");
    fs::write(&path, "[network]\nnum_bs = 2\nnum_users = 2\n[experiment]\ntrials = 3\n").unwrap();
    let cfg = load_config(&path).unwrap();
    assert_eq!(cfg.network.num_bs, 2);
    assert_eq!(cfg.experiment.trials, 3);

    fs::write(&path, "[experiment]\ntrails = 3\n").unwrap();
    match load_config(&path) {
        Err(Error::ConfigParse { path: p, message }) => {
            assert_eq!(p, path);
            assert!(message.contains("trails") && message.contains("line 2"), "{message}");
        }
        other => panic!("unexpected {other:?}"),
    }

    fs::write(&path, "[experiment]\nmethods = [\"oracle\"]\n").unwrap();
    assert!(matches!(load_config(&path), Err(Error::ConfigParse { .. })));
    assert!(matches!(load_config(&dir.path().join("missing.toml")), Err(Error::Io { .. })));
}

#[test]
fn shipped_configs_load() {
    let root = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    for name in ["reference.toml", "small.toml"] {
        load_config(&root.join(name)).unwrap();
    }
    let reference = load_config(&root.join("reference.toml")).unwrap();
    let mut expected = ExperimentConfig::default();
    expected.experiment.output_dir = "results/reference".into();
    assert_eq!(reference, expected);
}
