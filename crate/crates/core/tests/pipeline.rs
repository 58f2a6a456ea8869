use lcg_core::experiments::{read_records_csv, run_table, verify_all, write_records_csv, Method, RunConfig};
use lcg_core::generators::{read_jsonl, write_jsonl};
use lcg_core::verify::realize_osia;
use lcg_core::*;

fn labeled_er(n: usize, count: usize, seed: u64) -> Vec<DatasetRecord> {
    let mut ds = generate_dataset(&GenSpec::new(Family::Er, n, n, seed).param("p", 0.3), count).unwrap();
    let stats = label_dataset(&mut ds, 1_000_000);
    assert_eq!(stats.labeled, count);
    ds
}

#[test]
fn every_method_emits_only_certified_schemes() {
    let ds = labeled_er(7, 10, 21);
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        timing: false,
        best_of: 3,
        policy: Some(PolicyParams::new(4, 8, 2, 1)),
        scheme_dir: Some(dir.path().to_path_buf()),
        ..RunConfig::default()
    };
    let methods = [
        Method::Sli,
        Method::TabuCol,
        Method::Tdma,
        Method::Lcg,
        Method::Osia,
        Method::Ovia(2),
        Method::Ssia,
        Method::Svia(2),
    ];
    let table = run_table("er-7x7", &ds, &methods, &cfg).unwrap();
    assert_eq!(table.records.len(), ds.len() * methods.len());
    let report = verify_all(dir.path()).unwrap();
    assert!(report.all_ok());
    assert_eq!(report.files.len(), table.schemes.len());
    for rec in table.records.iter().filter(|r| r.success) {
        let scheme = &table.schemes[&(rec.method, rec.instance_id.clone())];
        assert_eq!(rec.dof(), Some(scheme.d_sym));
        assert_eq!(scheme.d_sym, Dof::new(scheme.b as u64, scheme.x as u64));
    }
}

#[test]
fn alignment_never_loses_to_orthogonal_access() {
    let ds = labeled_er(8, 12, 22);
    let cfg = RunConfig {
        timing: false,
        best_of: 4,
        ..RunConfig::default()
    };
    let table = run_table("er-8x8", &ds, &[Method::Tdma, Method::Osia, Method::Ssia], &cfg).unwrap();
    for rec in &ds {
        let d = |m| table.schemes[&(m, rec.id.clone())].d_sym;
        let tdma = d(Method::Tdma);
        assert_eq!(tdma, Dof::new(1, u64::from(rec.chi.unwrap())));
        assert!(d(Method::Osia) >= tdma, "{}", rec.id);
        assert!(d(Method::Ssia) >= d(Method::Osia), "{}", rec.id);
    }
}

#[test]
fn results_csv_round_trips() {
    let ds = labeled_er(6, 5, 23);
    let cfg = RunConfig {
        timing: false,
        ..RunConfig::default()
    };
    let table = run_table("er-6x6", &ds, &[Method::Sli, Method::Ovia(3)], &cfg).unwrap();
    let mut bytes = Vec::new();
    write_records_csv(&table.records, &mut bytes).unwrap();
    let back = read_records_csv(bytes.as_slice()).unwrap();
    assert_eq!(back, table.records);
}

#[test]
fn dataset_files_round_trip() {
    let ds = labeled_er(6, 8, 24);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ds.jsonl");
    write_jsonl(&path, &ds).unwrap();
    assert_eq!(read_jsonl(&path).unwrap(), ds);
}

#[test]
fn conflict_graph_follows_topology() {
    // Source 0 reaches destination 1, so message 0 interferes with message 1.
    let topo = TopologyInstance::new(3, 3, [(0, 0), (1, 1), (2, 2), (0, 1), (2, 1)], [(0, 0), (1, 1), (2, 2)]).unwrap();
    let g = build_conflict_graph(&topo);
    assert_eq!(g.edges(), &[(0, 1), (2, 1)]);
    // Messages 0 and 2 align at message 1, so two dimensions suffice.
    let c = Coloring::new(vec![1, 2, 1], 2).unwrap();
    let scheme = realize_osia(&g, &c).unwrap().with_topology(topo).unwrap();
    assert!(verify_scheme(&scheme).ok);
    assert_eq!(scheme.d_sym, Dof::new(1, 2));
}
