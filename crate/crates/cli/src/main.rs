use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dprtf_core::datagen::{
    baseline_predictions, evaluate_predictions, generate_dataset, read_manifest, read_predictions,
    write_predictions, write_tensor, GenConfig, HeadSpec, Split, Tensor, MANIFEST_FILE,
};
use dprtf_core::dprtf::{average_dictionary, build_dictionary, Dictionary, DELTA_I_MAX};
use dprtf_core::estimators::VAD_THRESHOLD_DB;
use dprtf_core::hrir::{DoaGrid, HrirSet};
use dprtf_core::roomsim::{simulate_brir_with, ImageSourceOptions, RoomConfig};
use dprtf_core::signals::StftConfig;
use dprtf_core::Error;
use serde::Serialize;

#[derive(Parser)]
#[command(
    name = "dprtf",
    version,
    about = "Binaural DP-RTF localization toolkit"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Override the configured master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Worker threads.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize spherical-head HRIR sets (`<out>/<id>.hrs`).
    GenHrir(HeadArgs),
    /// Generate a dataset from `--config`.
    GenData {
        /// Samples per instance; the config value by default.
        #[arg(long)]
        segment_len: Option<usize>,
    },
    /// Build the DP-RTF dictionary of one head (`<out>/dictionary.json`).
    BuildDict {
        #[command(flatten)]
        head: HeadArgs,
        #[arg(long, default_value_t = DELTA_I_MAX)]
        delta_i_max: f64,
    },
    /// Average dictionaries of several heads (`<out>/dictionary.json`).
    AvgDict {
        #[arg(required = true)]
        dictionaries: Vec<PathBuf>,
    },
    /// Cross-PSD predictions for a dataset split (`<out>/predictions.jsonl`).
    Baseline {
        /// Dataset directory holding the manifest.
        #[arg(long)]
        data: PathBuf,
        #[arg(long, default_value = "test")]
        split: String,
        #[arg(long, default_value_t = VAD_THRESHOLD_DB)]
        threshold_db: f64,
    },
    /// Score a predictions file (`<out>/report.json`).
    Evaluate {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        dict: PathBuf,
    },
    /// Simulate one BRIR (`<out>/brir.dpt`, `<out>/direct.dpt`, shape [2, len]).
    SimulateBrir {
        #[command(flatten)]
        head: HeadArgs,
        /// Room size x,y,z in metres.
        #[arg(long, value_delimiter = ',', required = true)]
        room: Vec<f64>,
        /// Array centre x,y,z in metres.
        #[arg(long, value_delimiter = ',', required = true)]
        center: Vec<f64>,
        #[arg(long)]
        rt60: f64,
        #[arg(long, allow_negative_numbers = true)]
        azimuth: f64,
        #[arg(long)]
        distance: f64,
        /// Reflection order cap; automatic by default.
        #[arg(long)]
        max_order: Option<usize>,
    },
}

#[derive(Args)]
struct HeadArgs {
    /// HRIR set file; a spherical head is synthesized when absent.
    #[arg(long, conflicts_with_all = ["radius", "id"])]
    hrir: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0875)]
    radius: f64,
    #[arg(long, default_value = "sphere")]
    id: String,
    #[arg(long, default_value_t = 16000)]
    sample_rate: u32,
}

impl HeadArgs {
    fn load(&self, grid: &DoaGrid) -> Result<HrirSet, Error> {
        match &self.hrir {
            Some(path) => HrirSet::load(path),
            None => {
                let spec = HeadSpec::Sphere {
                    id: self.id.clone(),
                    radius: self.radius,
                    ild_max_db: 6.0,
                    taps: None,
                };
                Ok(spec.load(self.sample_rate, grid)?.hrir)
            }
        }
    }
}

fn invalid(reason: impl Into<String>) -> Error {
    Error::Invalid {
        what: "arguments",
        reason: reason.into(),
    }
}

fn create_dir(dir: &Path) -> Result<(), Error> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_path_buf(),
        source,
    })
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<(), Error> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn load_config(common: &Common) -> Result<Option<GenConfig>, Error> {
    let Some(path) = &common.config else {
        return Ok(None);
    };
    let mut cfg = GenConfig::load(path)?;
    if let Some(seed) = common.seed {
        cfg.master_seed = seed;
    }
    Ok(Some(cfg))
}

fn run(cli: Cli) -> Result<(), Error> {
    let common = &cli.common;
    let cfg = load_config(common)?;
    let grid = cfg
        .as_ref()
        .map_or_else(DoaGrid::standard, |c| c.grid_deg.clone());
    let stft = cfg
        .as_ref()
        .map_or_else(StftConfig::default, |c| c.stft.clone());
    let out = &common.out;
    match &cli.command {
        Command::GenHrir(head) => {
            create_dir(out)?;
            let sets = match &cfg {
                Some(cfg) => cfg
                    .heads
                    .iter()
                    .filter(|h| matches!(h, HeadSpec::Sphere { .. }))
                    .map(|h| h.load(cfg.stft.sample_rate, &grid).map(|h| h.hrir))
                    .collect::<Result<Vec<_>, _>>()?,
                None => vec![head.load(&grid)?],
            };
            for set in sets {
                let path = out.join(format!("{}.hrs", set.head_id()));
                set.save(&path)?;
                println!("{}", path.display());
            }
        }
        Command::GenData { segment_len } => {
            let mut cfg = cfg.ok_or_else(|| invalid("gen-data needs --config"))?;
            if let Some(len) = segment_len {
                cfg.segment_len = *len;
            }
            create_dir(out)?;
            let records = generate_dataset(&cfg, out, common.jobs)?;
            println!("{} instances written to {}", records.len(), out.display());
        }
        Command::BuildDict { head, delta_i_max } => {
            let set = head.load(&grid)?;
            let dict = build_dictionary(&set, &grid, &stft, *delta_i_max)?;
            create_dir(out)?;
            dict.save(out.join("dictionary.json"))?;
        }
        Command::AvgDict { dictionaries } => {
            let dicts = dictionaries
                .iter()
                .map(Dictionary::load)
                .collect::<Result<Vec<_>, _>>()?;
            let mean = average_dictionary(&dicts)?;
            create_dir(out)?;
            mean.save(out.join("dictionary.json"))?;
        }
        Command::Baseline {
            data,
            split,
            threshold_db,
        } => {
            let split = Split::ALL
                .into_iter()
                .find(|s| s.name() == split)
                .ok_or_else(|| invalid(format!("unknown split {split}")))?;
            let records: Vec<_> = read_manifest(data.join(MANIFEST_FILE))?
                .into_iter()
                .filter(|r| r.split == split)
                .collect();
            let delta_i_max = cfg.as_ref().map_or(DELTA_I_MAX, |c| c.delta_i_max);
            let preds = baseline_predictions(data, &records, &stft, *threshold_db, delta_i_max)?;
            create_dir(out)?;
            write_predictions(out.join("predictions.jsonl"), &preds)?;
        }
        Command::Evaluate {
            data,
            predictions,
            dict,
        } => {
            let manifest = read_manifest(data.join(MANIFEST_FILE))?;
            let preds = read_predictions(predictions)?;
            let dict = Dictionary::load(dict)?;
            let eval = evaluate_predictions(&manifest, &preds, &dict)?;
            create_dir(out)?;
            write_json(&out.join("report.json"), &eval)?;
            println!(
                "ACC {:.4}  MAE {:.2} deg  ({} instances)",
                eval.overall.acc, eval.overall.mae_deg, eval.overall.n_instances
            );
        }
        Command::SimulateBrir {
            head,
            room,
            center,
            rt60,
            azimuth,
            distance,
            max_order,
        } => {
            let xyz = |v: &[f64], what: &str| -> Result<[f64; 3], Error> {
                v.try_into()
                    .map_err(|_| invalid(format!("--{what} needs three values")))
            };
            let (room, center) = (xyz(room, "room")?, xyz(center, "center")?);
            let set = head.load(&grid)?;
            let room = RoomConfig::new(room, center, *rt60);
            let mut opts = ImageSourceOptions::for_room(&room, set.sample_rate())?;
            if let Some(order) = max_order {
                opts.max_order = *order;
            }
            let brir = simulate_brir_with(&room, *azimuth, *distance, &set, &opts)?;
            create_dir(out)?;
            for (name, taps) in [("brir", &brir.taps), ("direct", &brir.direct)] {
                let data = taps.iter().flatten().map(|&v| v as f32).collect();
                write_tensor(
                    out.join(format!("{name}.dpt")),
                    &Tensor::new(vec![2, brir.len()], data)?,
                )?;
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { 3 } else { 2 })
        }
    }
}
