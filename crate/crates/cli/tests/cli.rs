use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shapecodes")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = run(args);
    assert!(out.status.success(), "{args:?} failed:\n{}", String::from_utf8_lossy(&out.stderr));
    out
}

fn p(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

fn gen_small(dir: &Path, name: &str) -> String {
    let data = p(dir, name);
    ok(&["gen", "--out", &data, "--classes", "3", "--unseen", "1", "--per-class", "5", "--azimuths", "4", "--elevations", "0,±30", "--image-size", "8", "--seed", "3"]);
    data
}

#[test]
fn gen_counts_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = p(dir.path(), "a.vgds");
    let b = p(dir.path(), "b.vgds");
    let args = |out: &str| vec!["gen", "--out", out, "--classes", "6", "--per-class", "40", "--azimuths", "12", "--elevations", "0,±30,±60,±90", "--image-size", "8", "--seed", "1"].into_iter().map(String::from).collect::<Vec<_>>();
    let aa = args(&a);
    ok(&aa.iter().map(String::as_str).collect::<Vec<_>>());
    let bb = args(&b);
    ok(&bb.iter().map(String::as_str).collect::<Vec<_>>());
    let ds = shapecodes::shapeforge::Dataset::read(Path::new(&a)).unwrap();
    assert_eq!(ds.objects.len(), 240);
    assert_eq!(ds.spec.num_views(), 84);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let manifest = std::fs::read_to_string(format!("{a}.manifest")).unwrap();
    assert!(manifest.contains("command=gen") && manifest.contains("elevations=0,±30,±60,±90") && manifest.contains("output.a.vgds.sha256="));
}

#[test]
fn usage_errors_exit_2() {
    let out = run(&["gen", "--bogus"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["gen", "--out", &p(dir.path(), "x"), "--classes", "13"]);
    assert_eq!(out.status.code(), Some(2));
    let cfg = p(dir.path(), "c.cfg");
    std::fs::write(&cfg, "colour=blue\n").unwrap();
    let out = run(&["gen", "--out", &p(dir.path(), "x"), "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_data_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["train", "--data", &p(dir.path(), "none.vgds"), "--out", &p(dir.path(), "m.scpt")]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn config_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = p(dir.path(), "gen.cfg");
    std::fs::write(&cfg, "# small\nclasses=2\nper_class=3\nazimuths=4\nelevations=0\nimage_size=8\n").unwrap();
    let data = p(dir.path(), "d.vgds");
    ok(&["gen", "--config", &cfg, "--per-class", "4", "--out", &data]);
    let ds = shapecodes::shapeforge::Dataset::read(Path::new(&data)).unwrap();
    assert_eq!(ds.objects.len(), 8);
}

#[test]
fn train_eval_export_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let data = gen_small(dir.path(), "d.vgds");
    let ck = p(dir.path(), "m.scpt");
    let ck2 = p(dir.path(), "m2.scpt");
    for out in [&ck, &ck2] {
        ok(&["train", "--data", &data, "--out", out, "--lr-grid", "0.1,0.01", "--max-epochs", "2", "--batch-size", "4", "--seed", "5"]);
    }
    assert_eq!(std::fs::read(&ck).unwrap(), std::fs::read(&ck2).unwrap());
    let log = std::fs::read_to_string(format!("{ck}.log.tsv")).unwrap();
    assert!(log.starts_with("lr\tepoch\tstep\ttrain_loss\tval_loss\tbest\tselected"));
    assert_eq!(log.lines().filter(|l| l.ends_with("\t1")).count(), 1);
    assert!(run(&["train", "--data", &data, "--out", &ck, "--variant", "gan"]).status.code() == Some(2));

    let table = p(dir.path(), "recon.tsv");
    ok(&["eval-recon", "--data", &data, "--checkpoint", &ck, "--out", &table]);
    let text = std::fs::read_to_string(&table).unwrap();
    assert!(text.contains("ours\t-\ttest\tmse_x1000"));
    assert!(text.contains("ours\t-\tunseen_test\tmse_x1000"));
    assert!(text.contains("avg_viewgrid\t-\tunseen_test\tmse_x1000"));
    assert!(text.contains("class_avg_viewgrid\t-\ttest\tmse_x1000"));
    assert!(!text.contains("class_avg_view\t-\tunseen_test"));
    let baselines = String::from_utf8(ok(&["eval-recon", "--data", &data, "--baselines", "avg_view"]).stdout).unwrap();
    assert!(baselines.contains("avg_view\t-\ttest"));

    let knn = String::from_utf8(ok(&["eval-knn", "--data", &data, "--checkpoint", &ck, "--k", "3", "--classes", "unseen"]).stdout).unwrap();
    for row in ["ours\tfc1\tunseen", "ours\tfc3\tunseen", "ours\tbest\tunseen", "pixels\t-\tunseen", "random\tbest\tunseen"] {
        assert!(knn.contains(row), "missing {row} in\n{knn}");
    }

    let pgm = p(dir.path(), "m.pgm");
    ok(&["export", "--data", &data, "--checkpoint", &ck, "--object", "2", "--view", "1,3", "--out", &pgm]);
    let img = shapecodes::viewgrid::GrayImage::read(Path::new(&pgm)).unwrap();
    // Two stacked 3×4 grids of 8×8 tiles with 1-px separators.
    assert_eq!(img.width, 4 * 8 + 3);
    assert_eq!(img.height, 2 * (3 * 8 + 2) + 1);
    let ds = shapecodes::shapeforge::Dataset::read(Path::new(&data)).unwrap();
    for idx in ds.spec.indices() {
        assert_eq!(shapecodes::viewgrid::montage_tile(&img, 0, idx, 3, 8, 8), ds.view_pixels(2, idx));
    }
    assert!(std::fs::read_to_string(format!("{pgm}.manifest")).unwrap().contains("observed_view=1,3"));
    assert_eq!(run(&["export", "--data", &data, "--checkpoint", &ck, "--object", "999", "--out", &pgm]).status.code(), Some(2));

    let hm = p(dir.path(), "heat");
    ok(&["heatmap", "--data", &data, "--checkpoint", &ck, "--class", "box", "--out", &hm]);
    let txt = std::fs::read_to_string(format!("{hm}.txt")).unwrap();
    assert_eq!(txt.lines().count(), 3);
    assert!(txt.lines().all(|l| l.split('\t').count() == 4));

    let other = p(dir.path(), "o.vgds");
    ok(&["gen", "--out", &other, "--classes", "2", "--per-class", "2", "--azimuths", "3", "--elevations", "0", "--image-size", "8"]);
    assert_eq!(run(&["eval-recon", "--data", &other, "--checkpoint", &ck]).status.code(), Some(3));
}
