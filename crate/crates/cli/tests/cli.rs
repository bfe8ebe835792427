use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use polyinr::io::{export_image, save_checkpoint};
use polyinr::{Generator, GeneratorConfig, ImageBuffer};

fn polyinr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polyinr"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn small_config() -> GeneratorConfig {
    GeneratorConfig {
        z_dim: 8,
        w_dim: 16,
        levels: 3,
        feature_dim: 8,
        class_embed_dim: 8,
        ..Default::default()
    }
}

fn checkpoint(dir: &Path) -> PathBuf {
    let path = dir.join("g.pinr");
    save_checkpoint(&path, &Generator::<f32>::init(&small_config(), 4).unwrap()).unwrap();
    path
}

fn config_file(dir: &Path, extra: &str) -> PathBuf {
    let gen = serde_json_text(&small_config());
    let path = dir.join("run.json");
    std::fs::write(
        &path,
        format!("{{\"generator\": {gen}, \"seed\": 1{extra}}}"),
    )
    .unwrap();
    path
}

fn serde_json_text(cfg: &GeneratorConfig) -> String {
    format!(
        r#"{{"z_dim": {}, "w_dim": {}, "levels": {}, "feature_dim": {}, "num_classes": 0,
            "class_embed_dim": 8, "leaky_slope": 0.2, "test_identity_activation": false}}"#,
        cfg.z_dim, cfg.w_dim, cfg.levels, cfg.feature_dim
    )
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn params_reports_the_default_count() {
    let out = polyinr(&["params"]);
    assert_eq!(code(&out), 0);
    let expected = polyinr::count_params(&GeneratorConfig::default());
    assert!(String::from_utf8_lossy(&out.stdout).contains(&format!("{expected} parameters")));
}

#[test]
fn sample_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = checkpoint(dir.path());
    let (a, b) = (dir.path().join("a.png"), dir.path().join("b.png"));
    for out in [&a, &b] {
        let r = polyinr(&[
            "sample",
            "--ckpt",
            s(&ckpt),
            "--seed",
            "9",
            "--size",
            "12x10",
            "--out",
            s(out),
        ]);
        assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let img = polyinr::io::import_image(&a).unwrap();
    assert_eq!(img.dims(), (12, 10));
}

#[test]
fn manipulation_commands_write_images() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = checkpoint(dir.path());
    let c = s(&ckpt);
    let out = |n: &str| dir.path().join(n);
    let runs: Vec<(Vec<&str>, PathBuf)> = vec![
        (vec!["stylemix", "--levels", "1-2"], out("mix.png")),
        (vec!["extrapolate", "--margin", "0.25"], out("ext.png")),
        (
            vec!["upsample", "--factor", "2", "--mode", "nested"],
            out("up.png"),
        ),
        (vec!["heatmap", "--level", "1"], out("heat.png")),
    ];
    for (args, path) in runs {
        let mut full = args.clone();
        full.extend(["--ckpt", c, "--size", "5x5", "--out", s(&path)]);
        let r = polyinr(&full);
        assert_eq!(
            code(&r),
            0,
            "{args:?}: {}",
            String::from_utf8_lossy(&r.stderr)
        );
        assert!(path.exists());
    }
    assert_eq!(
        polyinr::io::import_image(out("up.png")).unwrap().dims(),
        (9, 9)
    );

    let frames = out("frames");
    let r = polyinr(&[
        "interpolate",
        "--ckpt",
        c,
        "--frames",
        "3",
        "--size",
        "4x4",
        "--out",
        s(&frames),
    ]);
    assert_eq!(code(&r), 0);
    assert_eq!(std::fs::read_dir(&frames).unwrap().count(), 3);
}

#[test]
fn sample_then_invert() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = checkpoint(dir.path());
    let target = dir.path().join("t.png");
    let affine = dir.path().join("t.affine");
    let c = s(&ckpt);
    assert_eq!(
        code(&polyinr(&[
            "sample",
            "--ckpt",
            c,
            "--size",
            "8x8",
            "--out",
            s(&target)
        ])),
        0
    );
    let r = polyinr(&[
        "invert",
        "--ckpt",
        c,
        "--target",
        s(&target),
        "--steps",
        "20",
        "--out",
        s(&affine),
    ]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    assert!(String::from_utf8_lossy(&r.stdout).contains("psnr"));
    let r = polyinr(&[
        "sample",
        "--ckpt",
        c,
        "--affine",
        s(&affine),
        "--size",
        "8x8",
        "--out",
        s(&dir.path().join("r.png")),
    ]);
    assert_eq!(code(&r), 0);
}

#[test]
fn fit_and_train_produce_checkpoints() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_file(dir.path(), "");
    let target = dir.path().join("target.png");
    export_image(
        &target,
        &ImageBuffer::from_fn(6, 6, |r, c| [r as f32 / 5.0, c as f32 / 5.0, 0.0]),
    )
    .unwrap();
    let fitted = dir.path().join("fit.pinr");
    let r = polyinr(&[
        "fit",
        "--config",
        s(&cfg),
        "--target",
        s(&target),
        "--steps",
        "10",
        "--out",
        s(&fitted),
    ]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    assert_eq!(
        polyinr::io::load_checkpoint(&fitted).unwrap().config(),
        &small_config()
    );

    let data = dir.path().join("data");
    std::fs::create_dir(&data).unwrap();
    for (i, img) in polyinr::training::blob_dataset(3, 8, 0).iter().enumerate() {
        export_image(data.join(format!("{i}.png")), img).unwrap();
    }
    let trained = dir.path().join("gan.pinr");
    let r = polyinr(&[
        "train",
        "--config",
        s(&cfg),
        "--data",
        s(&data),
        "--schedule",
        "4:8x4,8:8x4",
        "--disc-hidden",
        "8",
        "--out",
        s(&trained),
    ]);
    assert_eq!(code(&r), 0, "{}", String::from_utf8_lossy(&r.stderr));
    assert!(trained.exists());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ckpt = checkpoint(dir.path());
    let c = s(&ckpt);
    let out = dir.path().join("x.png");
    let o = s(&out);

    assert_eq!(
        code(&polyinr(&[
            "sample", "--ckpt", c, "--size", "0x3", "--out", o
        ])),
        2
    );
    assert_eq!(
        code(&polyinr(&[
            "stylemix", "--ckpt", c, "--levels", "7", "--out", o
        ])),
        2
    );
    assert_eq!(
        code(&polyinr(&[
            "extrapolate",
            "--ckpt",
            c,
            "--margin",
            "-1",
            "--out",
            o
        ])),
        2
    );
    assert_eq!(code(&polyinr(&["sample", "--out", o])), 2);

    let bad = dir.path().join("bad.pinr");
    std::fs::write(&bad, b"NOPE0000").unwrap();
    assert_eq!(
        code(&polyinr(&["sample", "--ckpt", s(&bad), "--out", o])),
        3
    );
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"seed": 1, "unknown": 2}"#).unwrap();
    assert_eq!(code(&polyinr(&["params", "--config", s(&cfg)])), 3);

    let target = dir.path().join("target.png");
    export_image(
        &target,
        &ImageBuffer::from_fn(4, 4, |r, _| [r as f32 / 3.0, 0.0, 0.0]),
    )
    .unwrap();
    let good_cfg = config_file(dir.path(), "");
    let r = polyinr(&[
        "fit",
        "--config",
        s(&good_cfg),
        "--target",
        s(&target),
        "--steps",
        "30",
        "--lr",
        "1e30",
    ]);
    assert_eq!(code(&r), 4, "{}", String::from_utf8_lossy(&r.stderr));
}
