use std::path::Path;
use std::process::{Command, Output};

use topo_smear::field::{load_field, FieldFormat};

fn stump(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stump")).args(args).output().unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn gen_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        let o = stump(&["gen", "blobs", "--seed", "7", "--output", path_str(out)]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    for name in ["blobs.csv", "blobs.png"] {
        assert_eq!(std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap());
    }
    let f = load_field(a.join("blobs.csv"), FieldFormat::Csv).unwrap();
    assert_eq!(f.shape(), (64, 64));
}

#[test]
fn zero_steps_returns_the_input() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g");
    assert!(stump(&["gen", "circle", "--size", "24", "--output", path_str(&g)]).status.success());
    let input = g.join("circle.csv");
    let out = dir.path().join("run");
    let o = stump(&[
        "run", "--input", path_str(&input), "--preset", "circle", "--steps", "0", "--seed", "1",
        "--output", path_str(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        load_field(out.join("final.csv"), FieldFormat::Csv).unwrap(),
        load_field(&input, FieldFormat::Csv).unwrap()
    );
    let log = std::fs::read_to_string(out.join("loss_log.csv")).unwrap();
    assert_eq!(log.trim(), "step,wall_ms,topo_loss,data_loss,total_loss");
    assert!(out.join("diagram.csv").exists() && out.join("final.png").exists());
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let cfg = dir.path().join("run.toml");
    std::fs::write(
        &cfg,
        format!(
            "input = \"wells\"\nsize = 20\npreset = \"wells\"\nseed = 4\nsteps = 1000\noutput = \"{}\"\n",
            out.display()
        ),
    )
    .unwrap();
    let o = stump(&["run", "--config", path_str(&cfg), "--steps", "5"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let log = std::fs::read_to_string(out.join("loss_log.csv")).unwrap();
    assert_eq!(log.lines().count(), 6);
}

#[test]
fn errors_are_one_line_and_nonzero() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    let cases: [&[&str]; 4] = [
        &["run", "--input", "/no/such/file.csv", "--preset", "wells", "--seed", "1", "--output", path_str(&out)],
        &["run", "--input", "wells", "--preset", "wells", "--output", path_str(&out)],
        &["run", "--input", "wells", "--preset", "donut", "--seed", "1", "--output", path_str(&out)],
        &["gen", "circle", "--n-points", "2", "--output", path_str(&out)],
    ];
    for args in cases {
        let o = stump(args);
        assert!(!o.status.success(), "{args:?} should fail");
        let err = String::from_utf8_lossy(&o.stderr);
        assert_eq!(err.trim_end().lines().count(), 1, "{err}");
        assert!(err.starts_with("error: "), "{err}");
    }
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "steps = \"many\"\n").unwrap();
    assert!(!stump(&["run", "--config", path_str(&cfg)]).status.success());
}

#[test]
fn diagram_prints_csv() {
    let o = stump(&["diagram", "--input", "wells", "--size", "32"]);
    assert!(o.status.success());
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("dim,birth,death,birth_vertex,death_vertex"));
    assert!(lines.any(|l| l.starts_with("0,") && l.contains(",inf,")));
}

#[test]
fn smearvis_and_bench_write_their_files() {
    let dir = tempfile::tempdir().unwrap();
    let s = dir.path().join("s");
    let o = stump(&[
        "smearvis", "--input", "circle", "--preset", "circle", "--size", "32", "--n-samples", "16",
        "--seed", "2", "--output", path_str(&s),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for name in ["heat_birth.csv", "heat_death.csv", "heat.png"] {
        assert!(s.join(name).exists(), "{name}");
    }
    let b = dir.path().join("b");
    let o = stump(&[
        "bench", "--input", "blobs", "--preset", "blobs", "--size", "32", "--steps", "20",
        "--eval-every", "5", "--seed", "2", "--output", path_str(&b),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(b.join("bench.csv")).unwrap();
    assert_eq!(csv.lines().next(), Some("arm,step,elapsed_ms,loss,reduction_pct"));
    // initial point plus four checkpoints per arm
    assert_eq!(csv.lines().count(), 1 + 2 * 5);
}
