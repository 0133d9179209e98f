use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn pmpir(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pmpir")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_raw(path: &Path, values: impl Iterator<Item = u64>) {
    let bytes: Vec<u8> = values.flat_map(u64::to_le_bytes).collect();
    fs::write(path, bytes).unwrap();
}

#[test]
fn params_reports() {
    let o = pmpir(&["params", "--family", "mbr", "--n", "6", "--k", "3", "--d", "4", "--q", "7"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("B=9 S=3 alpha=4"));
    assert!(stdout(&o).contains("rate=27/50"));
    let o = pmpir(&["params", "--family", "msr", "--n", "6", "--k", "3", "--d", "4", "--q", "13"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("B=6 S=2 alpha=2"));
    assert!(stdout(&o).contains("rate=3/8"));
    let o = pmpir(&["params", "--family", "mbr", "--n", "6", "--k", "4", "--d", "3", "--q", "7"]);
    assert!(!o.status.success());
    let o = pmpir(&["params", "--n", "6", "--k", "3", "--d", "4", "--q", "5"]);
    assert!(!o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("--q 7"));
}

#[test]
fn encode_retrieve_repair_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("db.bin");
    let values: Vec<u64> = (0..54u64).map(|i| (i * 5 + 3) % 7).collect();
    write_raw(&input, values.iter().copied());
    let store = dir.path().join("store");
    let geo = ["--n", "6", "--k", "3", "--d", "4", "--q", "7"];
    let mut args = vec!["encode", "--input", input.to_str().unwrap(), "--out", store.to_str().unwrap()];
    args.extend(geo);
    assert!(pmpir(&args).status.success());
    let first = fs::read(store.join("node_1.bin")).unwrap();
    // encoding is reproducible
    let store2 = dir.path().join("store2");
    args[4] = store2.to_str().unwrap();
    assert!(pmpir(&args).status.success());
    assert_eq!(fs::read(store2.join("node_1.bin")).unwrap(), first);

    let out = dir.path().join("f2.bin");
    let tr = dir.path().join("t.json");
    let o = pmpir(&[
        "retrieve", "--store", store.to_str().unwrap(), "--file", "2", "--seed", "4",
        "--out", out.to_str().unwrap(), "--transcript", tr.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let got = fs::read(&out).unwrap();
    let want: Vec<u8> = values[27..].iter().flat_map(|v| v.to_le_bytes()).collect();
    assert_eq!(got, want);
    let t: serde_json::Value = serde_json::from_slice(&fs::read(&tr).unwrap()).unwrap();
    assert_eq!(t["rate"], "27/50");
    assert_eq!(t["total_downloaded"], 50);
    assert_eq!(t["f0"], 2);

    let o = pmpir(&["retrieve", "--store", store.to_str().unwrap(), "--file", "3"]);
    assert!(!o.status.success());

    let o = pmpir(&["repair", "--store", store.to_str().unwrap(), "--failed", "2", "--helpers", "1,3,4,5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("24 symbols downloaded (6 per helper), bit-exact: true"));
    let o = pmpir(&["repair", "--store", store.to_str().unwrap(), "--failed", "2", "--helpers", "1,2,3,4"]);
    assert!(!o.status.success());
    let o = pmpir(&["repair", "--store", store.to_str().unwrap(), "--failed", "2", "--helpers", "1,3,4"]);
    assert!(!o.status.success());
}

#[test]
fn encode_rejects_bad_input() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("db.bin");
    let store = dir.path().join("store");
    let geo = ["--n", "6", "--k", "3", "--d", "4", "--q", "7"];
    for len in [0u64, 26] {
        write_raw(&input, 0..len);
        let mut args = vec!["encode", "--input", input.to_str().unwrap(), "--out", store.to_str().unwrap()];
        args.extend(geo);
        assert!(!pmpir(&args).status.success());
        assert!(!store.exists());
    }
}

#[test]
fn msr_retrieve_through_cli() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("db.bin");
    write_raw(&input, (0..12u64).map(|i| i % 13));
    let store = dir.path().join("store");
    let geo = ["--family", "msr", "--n", "6", "--k", "3", "--d", "4"];
    let mut args = vec!["encode", "--input", input.to_str().unwrap(), "--out", store.to_str().unwrap()];
    args.extend(geo);
    assert!(pmpir(&args).status.success());
    let o = pmpir(&["retrieve", "--store", store.to_str().unwrap(), "--file", "1", "--strategy", "grouped"]);
    assert!(o.status.success());
    let t: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(t["rate"], "3/8");
    let o = pmpir(&["retrieve", "--store", store.to_str().unwrap(), "--file", "1", "--strategy", "tail"]);
    assert!(!o.status.success());
}

#[test]
fn audit_exit_codes() {
    let base = ["audit-privacy", "--n", "6", "--k", "3", "--d", "4", "--q", "5", "--trials", "2000"];
    let o = pmpir(&base);
    assert!(o.status.success(), "{}", stdout(&o));
    let mut leak = base.to_vec();
    leak.push("--plant-leak");
    assert!(!pmpir(&leak).status.success());
}

#[test]
fn rate_tables() {
    let o = pmpir(&["rate-table", "--n", "40", "--k", "7"]);
    assert!(o.status.success());
    let csv = stdout(&o);
    assert_eq!(csv.lines().next().unwrap(), "x,scheme_rate_frac,scheme_rate,dn_rate,lower,upper,collusion_ref");
    assert_eq!(csv.lines().count(), 33);
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig4.csv");
    let o = pmpir(&["rate-table", "--family", "msr", "--n", "40", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(fs::read_to_string(&out).unwrap().lines().count(), 20);
    let o = pmpir(&["rate-table", "--mode", "linked", "--n", "40", "--from", "4", "--to", "10"]);
    assert_eq!(stdout(&o).lines().count(), 5);
    // deterministic output
    assert_eq!(stdout(&pmpir(&["rate-table", "--n", "40", "--k", "7"])), csv);
}

#[test]
fn bench_runs() {
    let o = pmpir(&["bench", "--n", "6", "--k", "3", "--d", "4", "--iterations", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("downloads=50"));
}
