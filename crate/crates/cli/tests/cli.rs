use std::path::Path;
use std::process::{Command, Output};

use avatar_core::mesh::{load_obj, write_obj};
use avatar_core::primitives;
use avatar_core::tensor::Tensor;

fn avatar(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_avatar")).args(args).current_dir(dir).output().unwrap()
}

fn ok(out: &Output) {
    assert!(out.status.success(), "status {:?}\nstderr: {}", out.status, String::from_utf8_lossy(&out.stderr));
}

const SCENE: &str = r#"{
    "mesh": {"type": "icosphere", "radius": 1.0, "level": 3},
    "field": {"type": "sphere", "center": [0, 0, 0], "radius": 1.0},
    "camera": {"type": "look_at", "eye": [0, 0, -4], "target": [0, 0, 0], "fov_y_deg": 40, "width": 48, "height": 40},
    "render": {"sharpness": 400}
}"#;

#[test]
fn usage_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [&["frobnicate"][..], &["map", "--mesh", "m.obj"], &["losses"], &["losses", "--pred", "a.png"]] {
        assert_eq!(avatar(args, dir.path()).status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn data_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = avatar(&["render", "--scene", "missing.json", "--out", "x.png"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.json"));
    std::fs::write(dir.path().join("bad.json"), SCENE.replace("\"level\": 3", "\"level\": \"three\"")).unwrap();
    assert_eq!(avatar(&["render", "--scene", "bad.json", "--out", "x.png"], dir.path()).status.code(), Some(1));
    assert!(!dir.path().join("x.png").exists());
}

#[test]
fn render_writes_png_and_tensors() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("s.json"), SCENE).unwrap();
    ok(&avatar(&["render", "--scene", "s.json", "--out", "img.png", "--opacity", "o.trit", "--depth", "d.trit"], dir.path()));
    let img = image::open(dir.path().join("img.png")).unwrap();
    assert_eq!((img.width(), img.height()), (48, 40));
    let o = Tensor::load(dir.path().join("o.trit")).unwrap();
    assert_eq!(o.dims(), [40, 48]);
    // The ray through the image center hits the sphere 3 m away.
    assert!(o.data()[20 * 48 + 24] > 0.99);
    assert_eq!(o.data()[0], 0.0);
    let d = Tensor::load(dir.path().join("d.trit")).unwrap();
    let center = d.data()[20 * 48 + 24];
    assert!((center - 3.0).abs() < 0.02, "{center}");

    // Deterministic for a fixed seed.
    ok(&avatar(&["render", "--scene", "s.json", "--out", "a.png", "--seed", "4"], dir.path()));
    ok(&avatar(&["render", "--scene", "s.json", "--out", "b.png", "--seed", "4"], dir.path()));
    assert_eq!(std::fs::read(dir.path().join("a.png")).unwrap(), std::fs::read(dir.path().join("b.png")).unwrap());
}

#[test]
fn map_writes_coords_and_collision_csv() {
    let dir = tempfile::tempdir().unwrap();
    let m = primitives::icosphere::<f64>(1.0, 2);
    write_obj(dir.path().join("m.obj"), &m, m.vertices()).unwrap();
    let pts = [1.01f64, 0.0, 0.0, 0.0, 0.0, 1.02, 0.0, 0.0, 0.0];
    Tensor::from_f64(vec![3, 3], &pts).unwrap().save(dir.path().join("p.trit")).unwrap();
    ok(&avatar(&["map", "--mesh", "m.obj", "--points", "p.trit", "--dmax", "0.04", "--out", "u.trit"], dir.path()));
    let u = Tensor::load(dir.path().join("u.trit")).unwrap();
    assert_eq!(u.dims(), [3, 4]);
    let rows: Vec<&[f32]> = u.data().chunks(4).collect();
    assert_eq!((rows[0][3], rows[1][3], rows[2][3]), (1.0, 1.0, 0.0));
    assert!(rows[0][2] > 0.0);
    let csv = std::fs::read_to_string(dir.path().join("u.csv")).unwrap();
    assert!(csv.starts_with("d_max,face_frac,edge_frac,vertex_frac,out_of_range_frac\n0.04,"));
}

#[test]
fn collisions_are_monotone() {
    let dir = tempfile::tempdir().unwrap();
    let out = avatar(&["collisions", "--dmax", "0.01,0.02,0.04,0.08", "--samples", "5000", "--seed", "3"], dir.path());
    ok(&out);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut reader = csv::Reader::from_reader(text.as_bytes());
    let ratios: Vec<f64> = reader
        .records()
        .map(|r| {
            let r = r.unwrap();
            r[2].parse::<f64>().unwrap() + r[3].parse::<f64>().unwrap()
        })
        .collect();
    assert_eq!(ratios.len(), 4);
    assert!(ratios.windows(2).all(|w| w[1] >= w[0]), "{ratios:?}");
}

#[test]
fn deform_and_bake_the_demo() {
    let dir = tempfile::tempdir().unwrap();
    ok(&avatar(&["deform", "--frame", "3", "--out", "posed.obj"], dir.path()));
    let posed = load_obj::<f64>(dir.path().join("posed.obj")).unwrap();
    ok(&avatar(&["deform", "--pose", "0,0,0,0,0", "--out", "rest.obj"], dir.path()));
    let rest = load_obj::<f64>(dir.path().join("rest.obj")).unwrap();
    assert_eq!(posed.face_count(), rest.face_count());
    assert_ne!(posed.vertices(), rest.vertices());
    assert_eq!(avatar(&["deform", "--pose", "0,0", "--out", "x.obj"], dir.path()).status.code(), Some(1));

    ok(&avatar(&["bake-textures", "--frame", "5", "--resolution", "32", "--out", "t.trit", "--preview", "n.png"], dir.path()));
    let t = Tensor::load(dir.path().join("t.trit")).unwrap();
    assert_eq!(t.dims(), [32, 32, 15]);
    assert!(t.data().chunks(15).any(|texel| texel[14] == 1.0));
    assert!(dir.path().join("n.png").exists());
}

#[test]
fn refine_reaches_a_larger_sphere() {
    let dir = tempfile::tempdir().unwrap();
    let m = primitives::icosphere::<f64>(1.0, 2);
    write_obj(dir.path().join("m.obj"), &m, m.vertices()).unwrap();
    std::fs::write(dir.path().join("f.json"), r#"{"type": "sphere", "center": [0, 0, 0], "radius": 1.1}"#).unwrap();
    let args = ["refine", "--mesh", "m.obj", "--field", "f.json", "--out", "r.obj", "--trace", "t.json", "--iterations", "5"];
    ok(&avatar(&args, dir.path()));
    let r = load_obj::<f64>(dir.path().join("r.obj")).unwrap();
    for v in r.vertices() {
        assert!((v.norm() - 1.1).abs() < 2e-3, "{}", v.norm());
    }
    let trace: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("t.json")).unwrap()).unwrap();
    assert!(trace["trace"].as_array().unwrap().len() <= 6);
    assert_eq!(trace["converged"], true);
    assert!(trace["frozen"].as_array().unwrap().is_empty());
}

#[test]
fn losses_check_gradients_and_images() {
    let dir = tempfile::tempdir().unwrap();
    let out = avatar(&["losses", "--check-gradients", "--seed", "2"], dir.path());
    ok(&out);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let entries = v.as_array().unwrap();
    assert_eq!(entries.len(), 11);
    assert!(entries.iter().all(|e| e["passed"] == true));

    let px = |c: u8| image::RgbaImage::from_pixel(8, 8, image::Rgba([c, c, c, 255]));
    px(100).save(dir.path().join("a.png")).unwrap();
    px(100).save(dir.path().join("b.png")).unwrap();
    let out = avatar(&["losses", "--pred", "a.png", "--gt", "b.png"], dir.path());
    ok(&out);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!((v["col"].as_f64(), v["mask"].as_f64(), v["lappyr"].as_f64()), (Some(0.0), Some(0.0), Some(0.0)));
}
