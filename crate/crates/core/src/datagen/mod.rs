//! Deterministic dataset generation and the file formats shared with the
//! learner: `DPT1` tensors, the JSON-lines manifest and predictions files.
//!
//! Every instance draws its condition from its own RNG, seeded from the
//! master seed and the instance id, so output does not depend on worker
//! count or scheduling. Per-instance tensors are written by the workers; the
//! manifest is written once after all of them finish.

mod config;
mod eval;
mod manifest;
mod tensor;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use config::{
    GenConfig, Head, HeadSpec, RoomSpec, Rt60Spec, Snr, Split, SplitSpec, Splits, SEGMENT_LEN,
};
pub use eval::{baseline_predictions, evaluate_predictions, Evaluation};
pub use manifest::{
    read_manifest, read_predictions, write_manifest, write_predictions, InstanceRecord, NoiseLabel,
    Prediction,
};
pub use tensor::{read_tensor, write_tensor, Tensor};

use crate::dprtf::{build_dictionary, Dictionary};
use crate::error::{Error, Result};
use crate::roomsim::{
    generate_diffuse_noise, mix_at_snr, render_direct, render_source, simulate_brir_with,
    ImageSourceOptions, NoiseSource,
};
use crate::signals::{select_band, stft_forward};
use crate::sources::speech_like;

pub const MANIFEST_FILE: &str = "manifest.jsonl";
pub const INSTANCE_DIR: &str = "instances";
pub const DICT_DIR: &str = "dictionaries";

/// Seed of one instance's RNG, a stable hash of the master seed and the id.
pub fn instance_seed(master_seed: u64, id: &str) -> u64 {
    // FNV-1a over the id, then a SplitMix64 finalizer over the combination.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in id.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = master_seed ^ h.rotate_left(29);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mono recordings of a directory of WAV files, in file-name order.
///
/// Multichannel files are averaged to mono; integer samples are scaled to
/// [-1, 1].
pub fn load_wav_corpus(dir: impl AsRef<Path>, sample_rate: u32) -> Result<Vec<Arc<[f64]>>> {
    let dir = dir.as_ref();
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| e.eq_ignore_ascii_case("wav"))
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::invalid(
            "corpus",
            format!("no WAV files in {}", dir.display()),
        ));
    }
    paths
        .iter()
        .map(|p| load_wav_mono(p, sample_rate))
        .collect()
}

fn load_wav_mono(path: &Path, sample_rate: u32) -> Result<Arc<[f64]>> {
    let mut reader = hound::WavReader::open(path)?;
    let spec = reader.spec();
    if spec.sample_rate != sample_rate {
        return Err(Error::invalid(
            "corpus",
            format!(
                "{} is sampled at {} Hz, expected {sample_rate}",
                path.display(),
                spec.sample_rate
            ),
        ));
    }
    let interleaved: Vec<f64> = match spec.sample_format {
        hound::SampleFormat::Float => reader
            .samples::<f32>()
            .map(|s| s.map(f64::from))
            .collect::<std::result::Result<_, _>>()?,
        hound::SampleFormat::Int => {
            let scale = 1.0 / (1u64 << (spec.bits_per_sample - 1)) as f64;
            reader
                .samples::<i32>()
                .map(|s| s.map(|v| v as f64 * scale))
                .collect::<std::result::Result<_, _>>()?
        }
    };
    let channels = spec.channels.max(1) as usize;
    Ok(interleaved
        .chunks_exact(channels)
        .map(|c| c.iter().sum::<f64>() / channels as f64)
        .collect())
}

/// Everything a worker needs, loaded once.
struct Context<'a> {
    cfg: &'a GenConfig,
    heads: BTreeMap<String, Head>,
    dictionaries: BTreeMap<String, Dictionary>,
    sources: Option<Vec<Arc<[f64]>>>,
    noises: Option<Vec<Arc<[f64]>>>,
    out_dir: &'a Path,
}

/// Generate every instance of `cfg` under `out_dir` with `jobs` worker
/// threads and return the manifest records in id order.
pub fn generate_dataset(
    cfg: &GenConfig,
    out_dir: &Path,
    jobs: usize,
) -> Result<Vec<InstanceRecord>> {
    cfg.validate()?;
    let fs_hz = cfg.stft.sample_rate;
    let mut heads = BTreeMap::new();
    for spec in &cfg.heads {
        let head = spec.load(fs_hz, &cfg.grid_deg)?;
        let id = head.hrir.head_id().to_string();
        if heads.insert(id.clone(), head).is_some() {
            return Err(Error::invalid("config", format!("duplicate head id {id}")));
        }
    }
    for split in Split::ALL {
        if let Some(h) = cfg
            .splits
            .get(split)
            .heads
            .iter()
            .find(|h| !heads.contains_key(*h))
        {
            return Err(Error::invalid("config", format!("unknown head {h}")));
        }
    }
    let len = cfg.segment_len;
    let long_enough = |v: Vec<Arc<[f64]>>, what: &'static str| -> Result<Vec<Arc<[f64]>>> {
        let v: Vec<_> = v.into_iter().filter(|s| s.len() >= len).collect();
        if v.is_empty() {
            return Err(Error::invalid(
                what,
                format!("no recording of at least {len} samples"),
            ));
        }
        Ok(v)
    };
    let sources = match &cfg.source_corpus {
        Some(dir) => Some(long_enough(load_wav_corpus(dir, fs_hz)?, "source corpus")?),
        None => None,
    };
    let noises = match &cfg.noise_corpus {
        Some(dir) => Some(long_enough(load_wav_corpus(dir, fs_hz)?, "noise corpus")?),
        None => None,
    };
    let mut dictionaries = BTreeMap::new();
    for (id, head) in &heads {
        let dict = build_dictionary(&head.hrir, &cfg.grid_deg, &cfg.stft, cfg.delta_i_max)?;
        dictionaries.insert(id.clone(), dict);
    }

    let instance_dir = out_dir.join(INSTANCE_DIR);
    let dict_dir = out_dir.join(DICT_DIR);
    for dir in [&instance_dir, &dict_dir] {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    for (id, dict) in &dictionaries {
        dict.save(dict_dir.join(format!("{id}.json")))?;
    }

    let ctx = Context {
        cfg,
        heads,
        dictionaries,
        sources,
        noises,
        out_dir,
    };
    let work: Vec<(Split, String)> = Split::ALL
        .iter()
        .flat_map(|&s| {
            (0..cfg.splits.get(s).count).map(move |i| (s, format!("{}-{i:06}", s.name())))
        })
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::invalid("jobs", e.to_string()))?;
    let records = pool.install(|| {
        work.par_iter()
            .map(|(split, id)| generate_instance(&ctx, *split, id))
            .collect::<Result<Vec<_>>>()
    })?;
    write_manifest(out_dir.join(MANIFEST_FILE), &records)?;
    Ok(records)
}

fn pick<'a, T, R: Rng>(rng: &mut R, items: &'a [T]) -> &'a T {
    &items[rng.random_range(0..items.len())]
}

fn cut<R: Rng>(rng: &mut R, corpus: &[Arc<[f64]>], len: usize) -> Vec<f64> {
    let rec = pick(rng, corpus);
    let off = rng.random_range(0..=rec.len() - len);
    rec[off..off + len].to_vec()
}

fn generate_instance(ctx: &Context, split: Split, id: &str) -> Result<InstanceRecord> {
    let cfg = ctx.cfg;
    let len = cfg.segment_len;
    let fs_hz = cfg.stft.sample_rate as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(instance_seed(cfg.master_seed, id));

    let head_id = pick(&mut rng, &cfg.splits.get(split).heads).clone();
    let head = &ctx.heads[&head_id];
    let room_spec = pick(&mut rng, &cfg.rooms);
    let rt60 = *pick(&mut rng, &room_spec.rt60.values()?);
    let distance = *pick(&mut rng, &room_spec.distances);
    let theta = *pick(&mut rng, cfg.grid_deg.azimuths());
    let snr = *pick(&mut rng, &cfg.snr_db);
    let (noise_label, noise_source) = match &ctx.noises {
        Some(corpus) => {
            let samples: Arc<[f64]> = pick(&mut rng, corpus).clone();
            let seed = rng.random();
            (
                NoiseLabel::Recording,
                NoiseSource::Recording { samples, seed },
            )
        }
        None => {
            let kind = *pick(&mut rng, &cfg.noise_kinds);
            let seed = rng.random();
            (
                NoiseLabel::Synthetic(kind),
                NoiseSource::Synthetic { kind, seed },
            )
        }
    };
    let source = match &ctx.sources {
        Some(corpus) => cut(&mut rng, corpus, len),
        None => speech_like(len, fs_hz, &mut rng),
    };

    let room = room_spec.room(rt60);
    let opts = ImageSourceOptions::for_room(&room, cfg.stft.sample_rate)?.with_max_len(len);
    let brir = simulate_brir_with(&room, theta, distance, &head.hrir, &opts)?;
    let reverberant = render_source(&brir, &source)?;
    let direct = render_direct(&brir, &source)?;
    let mixture = if snr.db() == f64::INFINITY {
        reverberant
    } else {
        let noise = generate_diffuse_noise(len, head.mic_distance, &noise_source, &cfg.stft)?;
        mix_at_snr(&reverberant, &noise, snr.db())?
    };

    let mixture_spec = select_band(&stft_forward(&mixture, &cfg.stft)?)?;
    let direct_spec = select_band(&stft_forward(&direct, &cfg.stft)?)?;
    let target = ctx.dictionaries[&head_id]
        .entry(theta)
        .ok_or(Error::NotOnGrid(theta))?;

    let rel = |kind: &str| Path::new(INSTANCE_DIR).join(format!("{id}.{kind}.dpt"));
    let record = InstanceRecord {
        id: id.to_string(),
        split,
        theta_deg: theta,
        rt60_s: rt60,
        snr_db: snr,
        room_id: room_spec.id.clone(),
        head_id,
        distance_m: distance,
        noise_kind: noise_label,
        mixture: rel("mixture"),
        direct: rel("direct"),
        target: rel("target"),
    };
    write_tensor(
        ctx.out_dir.join(&record.mixture),
        &Tensor::from_spectrogram(&mixture_spec),
    )?;
    write_tensor(
        ctx.out_dir.join(&record.direct),
        &Tensor::from_spectrogram(&direct_spec),
    )?;
    let target_values = target.values().iter().map(|&v| v as f32).collect();
    write_tensor(
        ctx.out_dir.join(&record.target),
        &Tensor::new(vec![target.values().len()], target_values)?,
    )?;
    Ok(record)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn instance_seeds_differ_by_id_and_master() {
        let a = instance_seed(1, "train-000000");
        assert_eq!(a, instance_seed(1, "train-000000"));
        assert_ne!(a, instance_seed(1, "train-000001"));
        assert_ne!(a, instance_seed(2, "train-000000"));
    }
}
