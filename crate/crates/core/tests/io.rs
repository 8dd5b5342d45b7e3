use std::fs::File;
use std::io::BufWriter;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use topo_smear::field::{load_field, save_field, FieldFormat};
use topo_smear::ScalarField;

fn write_gray_png(path: &std::path::Path, w: u32, h: u32, depth: png::BitDepth, data: &[u8]) {
    let file = BufWriter::new(File::create(path).unwrap());
    let mut enc = png::Encoder::new(file, w, h);
    enc.set_color(png::ColorType::Grayscale);
    enc.set_depth(depth);
    enc.write_header().unwrap().write_image_data(data).unwrap();
}

#[test]
fn csv_round_trip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let f = ScalarField::from_fn(8, 8, |_, _| rng.gen_range(-1e3..1e3));
    let path = dir.path().join("f.csv");
    save_field(&f, &path, FieldFormat::Csv).unwrap();
    assert_eq!(load_field(&path, FieldFormat::Csv).unwrap(), f);
}

#[test]
fn png8_zero_image_and_clamped_export() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("z.png");
    write_gray_png(&path, 4, 4, png::BitDepth::Eight, &[0; 16]);
    assert_eq!(load_field(&path, FieldFormat::Png8).unwrap(), ScalarField::zeros(4, 4));

    let f = ScalarField::new(1, 3, vec![255.7, -3.0, 100.5]).unwrap();
    let out = dir.path().join("o.png");
    save_field(&f, &out, FieldFormat::Png8).unwrap();
    let back = load_field(&out, FieldFormat::Png8).unwrap();
    assert_eq!(back.values(), &[255.0, 0.0, 100.0]);
}

#[test]
fn png16_scales_to_255() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("w.png");
    write_gray_png(&path, 2, 1, png::BitDepth::Sixteen, &[0xff, 0xff, 0, 0]);
    let f = load_field(&path, FieldFormat::Png16).unwrap();
    assert_eq!(f.values(), &[255.0, 0.0]);
    // depth must match the requested format
    assert!(load_field(&path, FieldFormat::Png8).is_err());
}

#[test]
fn missing_file_and_unwritable_path() {
    assert!(load_field("/nonexistent/x.csv", FieldFormat::Csv).is_err());
    let f = ScalarField::zeros(1, 1);
    assert!(save_field(&f, "/nonexistent/dir/x.csv", FieldFormat::Csv).is_err());
}
