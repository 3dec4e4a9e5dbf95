use microdop::batch::{read_manifest, run_batch, sha256_hex, verify_manifest};
use microdop::config::{parse_config, RunConfig};
use microdop::format::{decode_any, decode_binary, encode, encode_binary, Format, Matrix};
use microdop::{Complex64, DopplerSpectrum, EchoFrame, Execution};
use proptest::prelude::*;

proptest! {
    #[test]
    fn spectrum_binary_round_trip(
        mag in prop::collection::vec(0.0..1e3f32, 2..300),
        start in -1e4..0.0f64,
        step in 0.01..100.0f64,
    ) {
        let spec = DopplerSpectrum {
            magnitude: mag.iter().map(|&v| v as f64).collect(),
            freq_start: start,
            bin_width: step,
        };
        let m = Matrix::from_spectrum(&spec);
        let bytes = encode_binary(&m);
        prop_assert_eq!(bytes.len(), 48 + 4 * mag.len());
        let back = decode_binary(&bytes).unwrap();
        prop_assert_eq!(&back, &m);
        prop_assert_eq!(back.to_spectrum().unwrap(), spec);
    }

    #[test]
    fn spectrum_csv_round_trip(mag in prop::collection::vec(0.0..1e3f32, 2..300)) {
        let spec = DopplerSpectrum {
            magnitude: mag.iter().map(|&v| v as f64).collect(),
            freq_start: -7.62939453125 * (mag.len() / 2) as f64,
            bin_width: 7.62939453125,
        };
        let m = Matrix::from_spectrum(&spec);
        let back = decode_any(&encode(&m, Format::Csv)).unwrap();
        prop_assert_eq!(back, m);
    }

    #[test]
    fn frames_binary_round_trip(
        values in prop::collection::vec((-1e-3..1e-3f32, -1e-3..1e-3f32), 1..40),
        rows in 1usize..6,
    ) {
        let frames: Vec<EchoFrame> = (0..rows)
            .map(|r| EchoFrame {
                samples: values.iter().map(|&(a, b)| Complex64::new((a * (r + 1) as f32) as f64, b as f64)).collect(),
                symbol_index: 8 * r,
                range_cell: 0.025,
            })
            .collect();
        let m = Matrix::from_frames(&frames).unwrap();
        let back = decode_binary(&encode_binary(&m)).unwrap();
        prop_assert_eq!(&back, &m);
        prop_assert_eq!(back.to_frames().unwrap(), frames);
    }
}

#[test]
fn truncated_and_foreign_files_are_rejected() {
    let spec = DopplerSpectrum {
        magnitude: vec![1.0; 16],
        freq_start: -8.0,
        bin_width: 1.0,
    };
    let bytes = encode_binary(&Matrix::from_spectrum(&spec));
    assert!(decode_binary(&bytes[..bytes.len() - 1]).is_err());
    assert!(decode_binary(&bytes[..20]).is_err());
    let mut wrong = bytes.clone();
    wrong[0] = b'X';
    assert!(decode_binary(&wrong).is_err());
    assert!(decode_any(b"not,a,spectrum\n1,2,3\n").is_err());
}

fn small_sweep(dir: &std::path::Path, format: &str) -> RunConfig {
    parse_config(&format!(
        r#"
preset = "setup1"
output_dir = "{}"

[waveform]
n_symbols = 2048

[noise]
snr_db = 20.0

[dsp]
subsample = 4
products = ["spectrum", "map", "frames"]
format = "{format}"

[sweep]
bistatic_angle_deg = [45.0, 135.0]
seed = [11, 12]
"#,
        dir.display()
    ))
    .unwrap()
}

fn file_hashes(dir: &std::path::Path) -> Vec<(String, String)> {
    let mut files: Vec<(String, String)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                sha256_hex(&std::fs::read(&p).unwrap()),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn batch_rerun_is_byte_identical() {
    for format in ["binary", "csv"] {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = small_sweep(&tmp.path().join("out"), format);
        let first = run_batch(&cfg, Execution::Parallel).unwrap();
        assert!(first.all_succeeded());
        assert_eq!(first.manifest.runs, 4);
        let before = file_hashes(&cfg.output_dir);
        assert_eq!(before.len(), 4 * 3 + 1);
        std::fs::remove_dir_all(&cfg.output_dir).unwrap();
        let again = run_batch(&cfg, Execution::Sequential).unwrap();
        assert!(again.all_succeeded());
        assert_eq!(file_hashes(&cfg.output_dir), before, "{format}");
        assert!(verify_manifest(&cfg.output_dir).unwrap().is_empty());
    }
}

#[test]
fn manifest_config_reproduces_payload() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_sweep(&tmp.path().join("a"), "binary");
    run_batch(&cfg, Execution::Parallel).unwrap();
    let manifest = read_manifest(&cfg.output_dir).unwrap();
    let rec = &manifest.records[3];
    assert_eq!(rec.labels.seed, 12);
    assert!((rec.labels.bistatic_angle_deg - 135.0).abs() < 1e-9);
    assert_eq!(rec.labels.snr_db, Some(20.0));

    let mut raw = rec.config.clone();
    raw.output_dir = Some(tmp.path().join("again").to_string_lossy().into_owned());
    let again = RunConfig::from_raw(raw).unwrap();
    assert!(again.sweep.is_empty());
    let report = run_batch(&again, Execution::Parallel).unwrap();
    let first = &rec.payloads[0];
    let redo = &report.manifest.records[0].payloads[0];
    assert_eq!(first.sha256, redo.sha256);
    let bytes = std::fs::read(again.output_dir.join(&redo.file)).unwrap();
    assert_eq!(sha256_hex(&bytes), first.sha256);
}

#[test]
fn different_seeds_give_different_noise() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = small_sweep(&tmp.path().join("a"), "binary");
    let report = run_batch(&cfg, Execution::Parallel).unwrap();
    let r = &report.manifest.records;
    assert_ne!(r[0].payloads[0].sha256, r[1].payloads[0].sha256);
}
