use std::path::PathBuf;

use wellfluor::commands::{cmd_analyze, cmd_lod, cmd_render, CommandError, SERIES_FILE};
use wellfluor::photometry::RenderSpec;
use wellfluor::plate::fluorescein_layout;
use wellfluor::report::parse_series_csv;
use wellfluor::{RunConfig, WellRole};

const GREENS: [u8; 12] = [200, 190, 180, 170, 160, 150, 140, 130, 120, 110, 100, 90];

fn render_row(dir: &std::path::Path) -> Vec<PathBuf> {
    GREENS
        .iter()
        .enumerate()
        .map(|(i, &g)| {
            let spec = RenderSpec {
                interior_rgb: [10, g, 20],
                wall_ring_rgb: Some([60, 60, 60]),
                noise_stddev: 2.0,
                seed: i as u64,
                ..RenderSpec::default()
            };
            let path = dir.join(format!("well{:02}.png", i + 1));
            cmd_render(&spec, &path).unwrap();
            path
        })
        .collect()
}

#[test]
fn analyze_recovers_rendered_levels() {
    let dir = tempfile::tempdir().unwrap();
    let paths = render_row(dir.path());
    let config = RunConfig {
        output_dir: dir.path().join("out"),
        ..RunConfig::default()
    };
    let out = cmd_analyze(&paths, &fluorescein_layout(), &config).unwrap();
    assert_eq!(out.series.records().len(), 12);
    for (record, &g) in out.series.records().iter().zip(&GREENS) {
        assert!(
            (record.reading - f64::from(g)).abs() <= 1.0,
            "well {}: {} vs {g}",
            record.well_index,
            record.reading
        );
    }
    assert_eq!(out.series.records()[11].role, WellRole::Blank);

    let written = std::fs::read_to_string(config.output_dir.join(SERIES_FILE)).unwrap();
    let reparsed = parse_series_csv("device", &written).unwrap();
    assert_eq!(reparsed.records().len(), 12);
    for (a, b) in reparsed.records().iter().zip(out.series.records()) {
        assert_eq!(a.well_index, b.well_index);
        assert_eq!(a.role, b.role);
        assert!((a.reading - b.reading).abs() < 1e-6);
    }

    // every rendered level is far above the 90 blank
    let lod = cmd_lod(&config.output_dir.join(SERIES_FILE), &config).unwrap();
    assert_eq!(lod.summary, "lod=1e-11");
    assert!(lod.svg.starts_with("<?xml") || lod.svg.starts_with("<svg"));
}

#[test]
fn unreadable_image_names_its_well() {
    let dir = tempfile::tempdir().unwrap();
    let mut paths = render_row(dir.path());
    std::fs::write(&paths[2], b"not an image").unwrap();
    let config = RunConfig {
        output_dir: dir.path().join("out"),
        ..RunConfig::default()
    };
    match cmd_analyze(&paths, &fluorescein_layout(), &config) {
        Err(err @ CommandError::Image { well: 3, .. }) => {
            assert!(err.to_string().contains("well 3"), "{err}");
        }
        other => panic!("{other:?}"),
    }

    paths[4] = dir.path().join("missing.png");
    std::fs::write(&paths[2], std::fs::read(&paths[3]).unwrap()).unwrap();
    match cmd_analyze(&paths, &fluorescein_layout(), &config) {
        Err(CommandError::UnreadableImage { well: 5, .. }) => {}
        other => panic!("{other:?}"),
    }
}

#[test]
fn too_many_images_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut paths = render_row(dir.path());
    paths.push(paths[0].clone());
    let config = RunConfig {
        output_dir: dir.path().join("out"),
        ..RunConfig::default()
    };
    assert!(matches!(
        cmd_analyze(&paths, &fluorescein_layout(), &config),
        Err(CommandError::TooManyImages { expected: 12, found: 13 })
    ));
}
