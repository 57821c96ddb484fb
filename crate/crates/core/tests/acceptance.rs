//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wellfluor::commands::{cmd_compare, cmd_fixtures, cmd_lod};
use wellfluor::imaging::{analyze_well_image, SegmentationParams};
use wellfluor::photometry::{render_well_image, wavelength_to_rgb, CmfTable, RenderSpec};
use wellfluor::plate::{fluorescein_layout, gfp_layout, SampleLevel, WellRole};
use wellfluor::quant::{detection_limit, validate_group_ordering, DetectionCriterion, MeasurementSeries, SeriesRecord};
use wellfluor::{MolarConcentration, RunConfig};

type Outcome = Result<String, String>;
type Criterion = (&'static str, &'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn write_fixture(dir: &Path, name: &str) -> std::path::PathBuf {
    let path = dir.join(format!("{name}.csv"));
    std::fs::write(&path, cmd_fixtures(name).unwrap()).unwrap();
    path
}

fn config_in(dir: &Path) -> RunConfig {
    RunConfig {
        output_dir: dir.to_path_buf(),
        ..RunConfig::default()
    }
}

fn molar_lod(level: &Option<SampleLevel>) -> Option<MolarConcentration> {
    level.as_ref().and_then(SampleLevel::as_molar)
}

fn victor_lod() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let csv = write_fixture(dir.path(), "victor-fluorescein");
    let start = Instant::now();
    let out = cmd_lod(&csv, &config_in(dir.path())).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    ensure(out.summary == "lod=1e-10", format!("summary {}", out.summary))?;
    ensure(
        molar_lod(&out.result.lod) == Some(MolarConcentration::from_decade(-10)),
        format!("lod {:?}", out.result.lod),
    )?;
    ensure(elapsed < Duration::from_secs(1), format!("took {elapsed:?}"))?;
    Ok(format!("{} (100 pM) in {elapsed:?}", out.summary))
}

fn device_lod() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let csv = write_fixture(dir.path(), "device-fluorescein");
    let out = cmd_lod(&csv, &config_in(dir.path())).map_err(|e| e.to_string())?;
    ensure(out.summary == "lod=1e-7", format!("summary {}", out.summary))?;
    let well8 = out.result.well(8).ok_or("well 8 missing from report")?;
    ensure(!well8.detected, "well 8 reported detected")?;
    ensure(
        (well8.relative_excess - 0.0490).abs() <= 1e-4,
        format!("well 8 excess {}", well8.relative_excess),
    )?;
    Ok(format!(
        "{} (100 nM), well 8 excess {:.4} not detected",
        out.summary, well8.relative_excess
    ))
}

fn sensitivity_gap() -> Outcome {
    let c = DetectionCriterion::default();
    let lod = |name: &str| {
        let series = wellfluor::fixtures::fixture_series(name).unwrap();
        molar_lod(&detection_limit(&series, &c).unwrap().lod).unwrap()
    };
    let victor = lod("victor-fluorescein");
    let device = lod("device-fluorescein");
    let decades = device.log10_molar() - victor.log10_molar();
    ensure(decades == 3.0, format!("gap {decades} decades"))?;
    Ok(format!("{device} vs {victor}: factor 10^{decades}"))
}

fn cross_instrument_rho() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let device = write_fixture(dir.path(), "device-fluorescein");
    let victor = write_fixture(dir.path(), "victor-fluorescein");
    let out = cmd_compare(&device, &victor, &config_in(dir.path())).map_err(|e| e.to_string())?;
    let common: Vec<u32> = out.report.per_well.iter().map(|w| w.well_index).collect();
    ensure(common == vec![9, 10, 11, 12], format!("common wells {common:?}"))?;
    ensure((out.report.rho - 0.8).abs() <= 1e-9, format!("rho {}", out.report.rho))?;
    ensure(out.summary.starts_with("rho=0.800"), out.summary.clone())?;
    Ok(out.summary)
}

fn gfp_ordering() -> Outcome {
    let layout = gfp_layout("m").map_err(|e| e.to_string())?;
    let series = |label: &str, readings: [f64; 5]| {
        let mut all = readings.to_vec();
        all.extend([1.0, 0.5]);
        MeasurementSeries::from_layout(label, &layout, &all).unwrap()
    };
    let high = series("high", [10.0, 8.0, 5.0, 4.0, 3.0]);
    let low = series("low", [7.0, 6.0, 6.0, 2.0, 1.0]);
    let v = validate_group_ordering(&high, &low).map_err(|e| e.to_string())?;
    ensure(v.valid_prefix_len == 2, format!("valid prefix {}", v.valid_prefix_len))?;
    ensure(v.first_violation == Some(3), format!("first violation {:?}", v.first_violation))?;
    Ok("valid up to well 2, first violation at well 3".into())
}

fn oracle_closure() -> Outcome {
    let params = SegmentationParams::default();
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    let mut worst = 0.0f64;
    for case in 0..100 {
        let width = rng.random_range(64..=320u32);
        let height = rng.random_range(64..=320u32);
        let max_r = (width.min(height) as f64) / 2.0 - 2.0;
        let radius = rng.random_range(10.0..max_r);
        let cx = rng.random_range(radius..f64::from(width) - 1.0 - radius);
        let cy = rng.random_range(radius..f64::from(height) - 1.0 - radius);
        let green = rng.random_range(20..=255u8);
        let spec = RenderSpec {
            width,
            height,
            disk_center: (cx, cy),
            disk_radius: radius,
            interior_rgb: [rng.random(), green, rng.random()],
            wall_ring_rgb: None,
            noise_stddev: 0.0,
            seed: case,
        };
        let png = render_well_image(&spec).map_err(|e| e.to_string())?.to_png();
        let profile = analyze_well_image(&png, &params).map_err(|e| format!("case {case} {spec:?}: {e}"))?;
        let err = (profile.green() - f64::from(green)).abs();
        worst = worst.max(err);
        ensure(err <= 1.0, format!("case {case}: error {err} for {spec:?}"))?;
    }

    let mut within = 0;
    let mut noisy_worst = 0.0f64;
    for seed in 0..100u64 {
        let spec = RenderSpec {
            width: 300,
            height: 300,
            disk_center: (150.0 + (seed % 7) as f64, 148.0 - (seed % 5) as f64),
            disk_radius: 60.0,
            interior_rgb: [10, 150, 30],
            wall_ring_rgb: None,
            noise_stddev: 5.0,
            seed,
        };
        if seed == 0 {
            let n = spec.interior_pixel_count();
            ensure(n >= 10_000, format!("only {n} interior pixels"))?;
        }
        let png = render_well_image(&spec).map_err(|e| e.to_string())?.to_png();
        let profile = analyze_well_image(&png, &params).map_err(|e| format!("seed {seed}: {e}"))?;
        let err = (profile.green() - 150.0).abs();
        noisy_worst = noisy_worst.max(err);
        if err <= 0.5 {
            within += 1;
        }
    }
    ensure(within >= 99, format!("{within}/100 noisy seeds within 0.5"))?;
    Ok(format!(
        "noiseless worst error {worst:.3}; noisy {within}/100 within 0.5 (worst {noisy_worst:.3})"
    ))
}

fn random_series(rng: &mut ChaCha8Rng) -> MeasurementSeries {
    let n = rng.random_range(2..=11u32);
    let blank = rng.random_range(1.0..500.0);
    let mut records: Vec<SeriesRecord> = (1..=n)
        .map(|i| {
            let reading = blank * rng.random_range(0.7..1.6);
            SeriesRecord::new(
                i,
                WellRole::Sample(MolarConcentration::from_decade(-(i as i32)).into()),
                reading,
            )
        })
        .collect();
    records.push(SeriesRecord::new(n + 1, WellRole::Blank, blank));
    MeasurementSeries::new("random", records).unwrap()
}

fn margin_monotonicity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let margins: Vec<f64> = (1..40).map(|k| f64::from(k) * 0.025).collect();
    let mut checks = 0usize;
    for case in 0..200 {
        let series = random_series(&mut rng);
        let runs: Vec<_> = margins
            .iter()
            .map(|&m| detection_limit(&series, &DetectionCriterion::new(m, true).unwrap()).unwrap())
            .collect();
        for i in 0..runs.len() {
            for j in i + 1..runs.len() {
                let (lo, hi) = (&runs[i], &runs[j]);
                let lo_set = lo.detected_wells();
                ensure(
                    hi.detected_wells().iter().all(|w| lo_set.contains(w)),
                    format!("case {case}: detected set grew from margin {} to {}", margins[i], margins[j]),
                )?;
                let ok = match (molar_lod(&lo.lod), molar_lod(&hi.lod)) {
                    (_, None) => true,
                    (None, Some(_)) => false,
                    (Some(a), Some(b)) => b >= a,
                };
                ensure(ok, format!("case {case}: lod dropped from margin {} to {}", margins[i], margins[j]))?;
                checks += 1;
            }
        }

        let base = detection_limit(&series, &DetectionCriterion::default()).unwrap();
        for _ in 0..50 {
            let scale = 10f64.powf(rng.random_range(-6.0..6.0));
            let records = series
                .records()
                .iter()
                .map(|r| SeriesRecord::new(r.well_index, r.role.clone(), r.reading * scale))
                .collect();
            let scaled = MeasurementSeries::new("scaled", records).unwrap();
            let out = detection_limit(&scaled, &DetectionCriterion::default()).unwrap();
            ensure(
                out.detected_wells() == base.detected_wells() && out.lod == base.lod,
                format!("case {case}: scaling by {scale} changed the result"),
            )?;
            checks += 1;
        }
    }
    Ok(format!("{checks} margin-pair and scaling checks over 200 series"))
}

fn dilution_exactness() -> Outcome {
    const PLATE_TABLE: [&str; 12] = [
        "100mM", "10mM", "1mM", "100uM", "10uM", "1uM", "100nM", "10nM", "1nM", "100pM", "10pM", "water",
    ];
    let layout = fluorescein_layout();
    ensure(layout.len() == 12, format!("{} wells", layout.len()))?;
    let mut previous: Option<MolarConcentration> = None;
    for (well, expected) in layout.wells().iter().zip(PLATE_TABLE) {
        let label = match &well.role {
            WellRole::Sample(level) => level.to_string().replace(' ', ""),
            WellRole::Blank => "water".to_string(),
            WellRole::Control => "control".to_string(),
        };
        ensure(label == expected, format!("well {}: {label} != {expected}", well.index))?;
        if let Some(c) = well.role.level().and_then(SampleLevel::as_molar) {
            if let Some(p) = previous {
                let gap = p.log10_molar() - c.log10_molar();
                ensure((gap - 1.0).abs() < 1e-12, format!("well {} spacing {gap}", well.index))?;
            }
            previous = Some(c);
        }
    }
    Ok("12 wells match, decade spacing exact".into())
}

fn wavelength_dominance() -> Outcome {
    let table = CmfTable::cie1931();
    let rgb = |nm| wavelength_to_rgb(nm, &table).map_err(|e| e.to_string());
    let [r, g, b] = rgb(400.0)?;
    ensure(b > g && b > r, format!("400 nm -> {r},{g},{b}"))?;
    let blue = [r, g, b];
    let [r, g, b] = rgb(520.0)?;
    ensure(g > r && g > b, format!("520 nm -> {r},{g},{b}"))?;
    let green = [r, g, b];
    let [r, g, b] = rgb(700.0)?;
    ensure(r > g && r > b, format!("700 nm -> {r},{g},{b}"))?;
    Ok(format!("400nm {blue:?}, 520nm {green:?}, 700nm {:?}", [r, g, b]))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("AC1", "victor LoD reproduction", victor_lod),
        ("AC2", "device LoD reproduction", device_lod),
        ("AC3", "sensitivity gap of 3 decades", sensitivity_gap),
        ("AC4", "cross-instrument rank agreement", cross_instrument_rho),
        ("AC5", "GFP ordering validity", gfp_ordering),
        ("AC6", "renderer oracle closure", oracle_closure),
        ("AC7", "margin monotonicity and scale invariance", margin_monotonicity),
        ("AC8", "dilution exactness", dilution_exactness),
        ("AC9", "wavelength dominance", wavelength_dominance),
    ];
    let mut failures = 0;
    for (id, name, check) in criteria {
        match check() {
            Ok(detail) => println!("PASS {id} {name}: {detail}"),
            Err(reason) => {
                failures += 1;
                println!("FAIL {id} {name}: {reason}");
            }
        }
    }
    println!("acceptance: {}/{} criteria passed", 9 - failures, 9);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
