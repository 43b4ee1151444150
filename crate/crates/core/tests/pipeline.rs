use dwasim::harness::{preset, run_scenario, simulate, Scenario};
use dwasim::modulator::{run_modulator, InputSpec, ModulatorConfig};
use dwasim::spectral::{estimate_psd, Window};

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v[v.len() / 2]
}

fn ideal_spectrum(amplitude_dbfs: f64) -> dwasim::Psd {
    let n_fft = 1 << 16;
    let spec = InputSpec {
        amplitude_dbfs,
        freq_hz: 30.0 * 12.5e6 / n_fft as f64,
        dc_offset: 0.0,
        sample_rate_hz: 12.5e6,
        n_samples: 2048 + n_fft,
    };
    let out = run_modulator::<f64>(&spec, &ModulatorConfig::default()).unwrap();
    estimate_psd(&out.levels[2048..], 12.5e6, Window::Hann, n_fft, 0.0).unwrap()
}

#[test]
fn inband_noise_far_below_total() {
    let psd = ideal_spectrum(-6.0);
    let band = 256;
    let inband: f64 = psd.bin_power[3..=band]
        .iter()
        .enumerate()
        .filter(|(i, _)| (i + 3).abs_diff(30) > 3)
        .map(|(_, p)| p)
        .sum();
    let total: f64 = psd.bin_power[1..].iter().sum();
    let ratio = 10.0 * (total / inband).log10();
    assert!(
        ratio >= 40.0,
        "in-band noise only {ratio:.1} dB below total"
    );
}

#[test]
fn noise_rises_forty_db_per_decade() {
    let psd = ideal_spectrum(-20.0);
    let low = median(psd.bin_power[100..200].to_vec());
    let high = median(psd.bin_power[1000..2000].to_vec());
    let slope = 10.0 * (high / low).log10();
    assert!((slope - 40.0).abs() < 3.0, "slope {slope:.2} dB/decade");
}

#[test]
fn bundle_schema() {
    let dir = tempfile::tempdir().unwrap();
    let sim = run_scenario(&preset("fig2-top").unwrap()).unwrap();
    let files = sim.write_bundle(dir.path()).unwrap();
    let names: Vec<String> = files
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    assert_eq!(
        names,
        [
            "manifest.toml",
            "codes.csv",
            "selection.csv",
            "dac.csv",
            "psd.csv",
            "psd.svg",
            "report.json"
        ]
    );
    let header = |name: &str| {
        let text = std::fs::read_to_string(dir.path().join(name)).unwrap();
        text.lines().next().unwrap().to_string()
    };
    assert_eq!(header("codes.csv"), "n,code,level");
    assert_eq!(header("dac.csv"), "n,code,s,tau,v,e");
    assert_eq!(header("selection.csv"), "n,code,s,pointer_before,mask");
    assert_eq!(header("psd.csv"), "freq_hz,power_db");
    let rows = std::fs::read_to_string(dir.path().join("dac.csv"))
        .unwrap()
        .lines()
        .count();
    assert_eq!(rows, 1 + sim.dac.len());
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("report.json")).unwrap())
            .unwrap();
    assert!(report["sndr"]["sndr_db"].is_number());
    assert!(report["tones"]["tones"].is_array());
    let svg = std::fs::read_to_string(dir.path().join("psd.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
}

#[test]
fn manifest_replays_identically() {
    let dir = tempfile::tempdir().unwrap();
    let first = run_scenario(&preset("fig2-mid").unwrap()).unwrap();
    first.write_bundle(&dir.path().join("a")).unwrap();
    let manifest = Scenario::load(dir.path().join("a/manifest.toml")).unwrap();
    assert_eq!(manifest, first.scenario);
    let second = run_scenario(&manifest).unwrap();
    second.write_bundle(&dir.path().join("b")).unwrap();
    for name in [
        "codes.csv",
        "selection.csv",
        "dac.csv",
        "psd.csv",
        "psd.svg",
        "report.json",
        "manifest.toml",
    ] {
        let a = std::fs::read(dir.path().join("a").join(name)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(name)).unwrap();
        assert!(a == b, "{name} differs");
    }
}

#[test]
fn single_precision_tracks_double() {
    let s = preset("fig2-ideal").unwrap();
    let d = simulate::<f64>(&s).unwrap();
    let f = simulate::<f32>(&s).unwrap();
    assert!(
        (d.sndr.sndr_db - f.sndr.sndr_db).abs() < 3.0,
        "{} vs {}",
        d.sndr.sndr_db,
        f.sndr.sndr_db
    );
}

#[test]
fn config_errors_surface_before_running() {
    let mut s = preset("fig2-top").unwrap();
    s.strategy.kind = dwasim::select::StrategyKind::Sadwa;
    let err = run_scenario(&s).unwrap_err();
    assert_eq!(err.exit_code(), 2);
    assert!(err.to_string().contains("L+1"), "{err}");
}
