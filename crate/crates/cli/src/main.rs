use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use wellfluor::commands::{self, AnalyzeOutput};
use wellfluor::config::{parse_config_file, ConfigOverrides};
use wellfluor::photometry::RenderSpec;
use wellfluor::plate::{fluorescein_layout, gfp_layout, parse_layout_config, PlateLayout};
use wellfluor::{MolarConcentration, RunConfig};

/// Fluorescence quantification from well photographs.
#[derive(Debug, Parser)]
#[command(name = "wellfluor", version)]
struct Cli {
    #[command(flatten)]
    global: GlobalOpts,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalOpts {
    /// Relative margin over the baseline for a well to count as detected.
    #[arg(long, global = true)]
    margin: Option<f64>,
    /// Green-channel percentile that seeds the well threshold.
    #[arg(long, global = true)]
    percentile: Option<f64>,
    /// Fraction of the well radius sampled (excludes the side wall).
    #[arg(long, global = true)]
    wall_exclusion: Option<f64>,
    /// Highest concentration inside the instrument's range, in mol/L.
    #[arg(long, global = true, value_parser = parse_conc)]
    max_conc: Option<MolarConcentration>,
    /// Saturated-pixel share above which a well is excluded.
    #[arg(long, global = true)]
    saturation_threshold: Option<f64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// `key = value` config file; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Preset {
    Fluorescein,
    GfpM,
    GfpN,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Measure one image per well and write profiles.csv and series.csv.
    Analyze {
        /// Layout file (`fold,<n>` and `well,<index>,<role>[,<conc>]` lines).
        #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
        layout: Option<PathBuf>,
        /// Built-in layout.
        #[arg(long, value_enum)]
        preset: Option<Preset>,
        /// Images in well order.
        #[arg(required = true)]
        images: Vec<PathBuf>,
    },
    /// Limit of detection of a series CSV; writes detection.csv and detection.svg.
    Lod { series: PathBuf },
    /// Spearman agreement between a device series and a reference series.
    Compare { device: PathBuf, reference: PathBuf },
    /// Render a synthetic well image as PNG.
    Render(RenderArgs),
    /// Print an embedded fixture as series CSV.
    Fixtures {
        name: String,
        /// Write to a file instead of standard output.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
struct RenderArgs {
    #[arg(long, default_value_t = 200)]
    width: u32,
    #[arg(long, default_value_t = 200)]
    height: u32,
    /// Disk center x; defaults to the frame center.
    #[arg(long)]
    cx: Option<f64>,
    /// Disk center y; defaults to the frame center.
    #[arg(long)]
    cy: Option<f64>,
    #[arg(long, default_value_t = 50.0)]
    radius: f64,
    #[arg(long, default_value_t = 0)]
    red: u8,
    #[arg(long, default_value_t = 200)]
    green: u8,
    #[arg(long, default_value_t = 0)]
    blue: u8,
    /// Wall ring colour as `r,g,b`.
    #[arg(long, value_parser = parse_rgb)]
    ring: Option<[u8; 3]>,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Output PNG path; defaults to well.png in the output directory.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn parse_conc(text: &str) -> Result<MolarConcentration, String> {
    MolarConcentration::parse_molar(text).map_err(|e| e.to_string())
}

fn parse_rgb(text: &str) -> Result<[u8; 3], String> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let [r, g, b] = parts.as_slice() else {
        return Err(format!("expected r,g,b, got {text:?}"));
    };
    let channel = |s: &str| s.parse::<u8>().map_err(|_| format!("invalid channel {s:?}"));
    Ok([channel(r)?, channel(g)?, channel(b)?])
}

fn run_config(global: &GlobalOpts) -> Result<RunConfig> {
    let mut config = RunConfig::default();
    if let Some(path) = &global.config {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        parse_config_file(&text)
            .with_context(|| format!("in config {}", path.display()))?
            .apply_to(&mut config);
    }
    ConfigOverrides {
        margin: global.margin,
        threshold_percentile: global.percentile,
        wall_exclusion: global.wall_exclusion,
        device_max_conc: global.max_conc,
        saturation_threshold: global.saturation_threshold,
        output_dir: global.out.clone(),
    }
    .apply_to(&mut config);
    config.validate()?;
    Ok(config)
}

fn load_layout(layout: Option<&PathBuf>, preset: Option<Preset>) -> Result<PlateLayout> {
    match (layout, preset) {
        (Some(path), _) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading layout {}", path.display()))?;
            parse_layout_config(&text).with_context(|| format!("in layout {}", path.display()))
        }
        (None, Some(Preset::Fluorescein)) => Ok(fluorescein_layout()),
        (None, Some(Preset::GfpM)) => Ok(gfp_layout("m")?),
        (None, Some(Preset::GfpN)) => Ok(gfp_layout("n")?),
        (None, None) => bail!("either --layout or --preset is required"),
    }
}

fn run(cli: Cli) -> Result<()> {
    let config = run_config(&cli.global)?;
    match cli.command {
        Command::Analyze {
            layout,
            preset,
            images,
        } => {
            let layout = load_layout(layout.as_ref(), preset)?;
            let AnalyzeOutput { profile_csv, .. } = commands::cmd_analyze(&images, &layout, &config)?;
            print!("{profile_csv}");
        }
        Command::Lod { series } => {
            let out = commands::cmd_lod(&series, &config)?;
            println!("{}", out.summary);
        }
        Command::Compare { device, reference } => {
            let out = commands::cmd_compare(&device, &reference, &config)?;
            println!("{}", out.summary);
        }
        Command::Render(args) => {
            let spec = RenderSpec {
                width: args.width,
                height: args.height,
                disk_center: (
                    args.cx.unwrap_or(f64::from(args.width) / 2.0),
                    args.cy.unwrap_or(f64::from(args.height) / 2.0),
                ),
                disk_radius: args.radius,
                interior_rgb: [args.red, args.green, args.blue],
                wall_ring_rgb: args.ring,
                noise_stddev: args.noise,
                seed: args.seed,
            };
            let output = args
                .output
                .unwrap_or_else(|| config.output_dir.join("well.png"));
            commands::cmd_render(&spec, &output)?;
        }
        Command::Fixtures { name, output } => {
            let csv = commands::cmd_fixtures(&name)?;
            match output {
                Some(path) => std::fs::write(&path, csv)
                    .with_context(|| format!("writing {}", path.display()))?,
                None => print!("{csv}"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
