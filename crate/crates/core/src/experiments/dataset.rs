//! Labeled feature-image datasets built from synthetic emitters.

use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bispectrum::{featurize, read_bsp, write_bsp, Scaling};
use crate::classifier::LabeledImage;
use crate::error::{Error, Result};
use crate::rng::{derive, Purpose};
use crate::signal::{default_profiles, extract_subsample, EmitterProfile, SubsampleSpec};

/// Everything needed to regenerate a dataset bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetManifest {
    pub emitters: Vec<EmitterProfile>,
    pub snr_levels_db: Vec<f64>,
    pub runs_per_setup: usize,
    pub samples_per_case: usize,
    pub subsample_length: usize,
    pub block: usize,
    pub scaling: Scaling,
    pub seed: u64,
    pub signal_length: usize,
}

impl DatasetManifest {
    /// 4 emitters × 3 SNR levels × 2 runs × 50 windows of 280 points,
    /// log-magnitude images.
    pub fn desk(seed: u64) -> Self {
        DatasetManifest {
            emitters: default_profiles(4),
            snr_levels_db: vec![20.0, 25.0, 30.0],
            runs_per_setup: 2,
            samples_per_case: 50,
            subsample_length: 280,
            block: 5,
            scaling: Scaling::LogMagnitude,
            seed,
            signal_length: 200_000,
        }
    }

    /// 16 emitters × 11 SNR levels × 2 runs × 200 windows of 1120 points.
    pub fn paper(seed: u64) -> Self {
        DatasetManifest {
            emitters: default_profiles(16),
            snr_levels_db: (0..11).map(|i| 2.0 * i as f64).collect(),
            runs_per_setup: 2,
            samples_per_case: 200,
            subsample_length: 1120,
            block: 5,
            scaling: Scaling::Linear,
            seed,
            signal_length: crate::signal::INFERRED_SIGNAL_LENGTH,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.emitters.len() < 2 {
            return Err(Error::invalid("dataset needs at least 2 emitters"));
        }
        if self.snr_levels_db.is_empty() || self.runs_per_setup == 0 || self.samples_per_case == 0 {
            return Err(Error::invalid(
                "snr_levels_db, runs_per_setup and samples_per_case must be non-empty",
            ));
        }
        if self.block == 0 || !self.subsample_length.is_multiple_of(self.block) {
            return Err(Error::invalid(format!(
                "subsample_length {} is not divisible by block {}",
                self.subsample_length, self.block
            )));
        }
        if self.subsample_length < 4 || self.subsample_length > self.signal_length {
            return Err(Error::invalid(format!(
                "subsample_length {} must lie in [4, signal_length = {}]",
                self.subsample_length, self.signal_length
            )));
        }
        if self.signal_length < 1120 {
            return Err(Error::invalid("signal_length must be at least 1120"));
        }
        for e in &self.emitters {
            e.validate()?;
        }
        Ok(())
    }

    pub fn num_cases(&self) -> usize {
        self.emitters.len() * self.snr_levels_db.len() * self.runs_per_setup
    }

    pub fn images_per_split(&self) -> usize {
        self.num_cases() * self.samples_per_case
    }

    pub fn image_side(&self) -> usize {
        self.subsample_length / self.block
    }

    /// Case `id` in emitter-major order.
    pub fn case(&self, id: usize) -> Case {
        let per_emitter = self.snr_levels_db.len() * self.runs_per_setup;
        let emitter = id / per_emitter;
        let rest = id % per_emitter;
        Case {
            id,
            emitter,
            snr_index: rest / self.runs_per_setup,
            run: rest % self.runs_per_setup,
        }
    }

    /// Recording seed of a case. The baseline depends only on SNR level and
    /// run, so every emitter transmits the same waveform in a given setup.
    fn signal_seed(&self, case: &Case) -> u64 {
        derive(
            self.seed,
            Purpose::CaseSignal,
            case.snr_index as u64,
            case.run as u64,
        )
    }

    fn window_seed(&self, split: Split, case: &Case) -> u64 {
        derive(self.seed, Purpose::Split, split as u64, case.id as u64)
    }

    /// Synthesized recording of a case.
    pub fn case_signal(&self, case: &Case) -> Result<crate::signal::IqSignal> {
        let profile = &self.emitters[case.emitter];
        crate::signal::synthesize_emitter_signal(
            profile,
            self.signal_length,
            self.snr_levels_db[case.snr_index],
            self.signal_seed(case),
        )
    }

    /// Window-extraction spec for `split` of a case. Splits use disjoint
    /// stream keys.
    pub fn window_spec(&self, split: Split, case: &Case) -> SubsampleSpec {
        SubsampleSpec::new(self.subsample_length, self.window_seed(split, case))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Case {
    pub id: usize,
    pub emitter: usize,
    pub snr_index: usize,
    pub run: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train = 0,
    Val = 1,
    Test = 2,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Val, Split::Test];

    pub fn dir_name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

/// One image of a split, tagged with its case.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetItem {
    pub case_id: usize,
    pub index: usize,
    pub item: LabeledImage,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub manifest: DatasetManifest,
    pub train: Vec<DatasetItem>,
    pub val: Vec<DatasetItem>,
    pub test: Vec<DatasetItem>,
}

impl Dataset {
    pub fn split(&self, split: Split) -> &[DatasetItem] {
        match split {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }

    pub fn labeled(&self, split: Split) -> Vec<LabeledImage> {
        self.split(split).iter().map(|d| d.item.clone()).collect()
    }
}

fn case_items(m: &DatasetManifest, case: &Case) -> Result<[Vec<DatasetItem>; 3]> {
    let signal = m.case_signal(case)?;
    let mut out: [Vec<DatasetItem>; 3] = Default::default();
    for split in Split::ALL {
        let spec = m.window_spec(split, case);
        out[split as usize] = (0..m.samples_per_case)
            .map(|i| {
                let window = extract_subsample(&signal, &spec, i as u64)?;
                Ok(DatasetItem {
                    case_id: case.id,
                    index: i,
                    item: LabeledImage {
                        image: featurize(&window, m.block, m.scaling)?,
                        label: case.emitter,
                    },
                })
            })
            .collect::<Result<_>>()?;
    }
    Ok(out)
}

/// Synthesizes every case and featurizes `samples_per_case` windows per split.
pub fn build_dataset(manifest: &DatasetManifest) -> Result<Dataset> {
    manifest.validate()?;
    let per_case: Vec<[Vec<DatasetItem>; 3]> = (0..manifest.num_cases())
        .into_par_iter()
        .map(|id| case_items(manifest, &manifest.case(id)))
        .collect::<Result<_>>()?;
    let mut ds = Dataset {
        manifest: manifest.clone(),
        train: Vec::new(),
        val: Vec::new(),
        test: Vec::new(),
    };
    for [train, val, test] in per_case {
        ds.train.extend(train);
        ds.val.extend(val);
        ds.test.extend(test);
    }
    Ok(ds)
}

#[derive(Debug, Serialize, Deserialize)]
struct StoredManifest {
    tool_version: String,
    #[serde(flatten)]
    manifest: DatasetManifest,
}

fn item_name(case_id: usize, index: usize) -> String {
    format!("{case_id}_{index}.bsp")
}

/// Writes `dir/{train,val,test}/{case_id}_{index}.bsp` and `dir/manifest.json`.
pub fn persist_dataset(ds: &Dataset, dir: &Path) -> Result<()> {
    for split in Split::ALL {
        let sub = dir.join(split.dir_name());
        fs::create_dir_all(&sub).map_err(|e| Error::io(&sub, e))?;
        ds.split(split)
            .par_iter()
            .try_for_each(|d| write_bsp(&sub.join(item_name(d.case_id, d.index)), &d.item.image))?;
    }
    let stored = StoredManifest {
        tool_version: format!("sei-core {}", env!("CARGO_PKG_VERSION")),
        manifest: ds.manifest.clone(),
    };
    let path = dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&stored).expect("manifest serializes");
    fs::write(&path, json + "\n").map_err(|e| Error::io(&path, e))
}

pub fn read_manifest(dir: &Path) -> Result<DatasetManifest> {
    let path = dir.join("manifest.json");
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let stored: StoredManifest =
        serde_json::from_str(&text).map_err(|e| Error::format(&path, e.to_string()))?;
    Ok(stored.manifest)
}

/// Loads a store written by [`persist_dataset`].
pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let manifest = read_manifest(dir)?;
    let mut ds = Dataset {
        manifest: manifest.clone(),
        train: Vec::new(),
        val: Vec::new(),
        test: Vec::new(),
    };
    for split in Split::ALL {
        let sub: PathBuf = dir.join(split.dir_name());
        let manifest = &manifest;
        let sub = &sub;
        let items: Vec<DatasetItem> = (0..manifest.num_cases())
            .into_par_iter()
            .flat_map_iter(|case_id| {
                let label = manifest.case(case_id).emitter;
                (0..manifest.samples_per_case).map(move |index| {
                    let mut image = read_bsp(&sub.join(item_name(case_id, index)))?;
                    image.source_emitter = Some(manifest.emitters[label].emitter_id);
                    Ok(DatasetItem {
                        case_id,
                        index,
                        item: LabeledImage { image, label },
                    })
                })
            })
            .collect::<Result<_>>()?;
        match split {
            Split::Train => ds.train = items,
            Split::Val => ds.val = items,
            Split::Test => ds.test = items,
        }
    }
    Ok(ds)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> DatasetManifest {
        DatasetManifest {
            emitters: default_profiles(2),
            snr_levels_db: vec![20.0],
            runs_per_setup: 2,
            samples_per_case: 3,
            subsample_length: 40,
            block: 5,
            scaling: Scaling::Linear,
            seed: 5,
            signal_length: 2000,
        }
    }

    #[test]
    fn counts_follow_manifest() {
        assert_eq!(DatasetManifest::desk(0).images_per_split(), 1200);
        assert_eq!(DatasetManifest::desk(0).image_side(), 56);
        let paper = DatasetManifest::paper(0);
        assert_eq!(paper.num_cases(), 352);
        assert_eq!(paper.images_per_split(), 70_400);
        assert_eq!(paper.image_side(), 224);
        let ds = build_dataset(&tiny()).unwrap();
        assert_eq!((ds.train.len(), ds.val.len(), ds.test.len()), (12, 12, 12));
    }

    #[test]
    fn case_indexing_is_emitter_major() {
        let m = DatasetManifest::desk(0);
        let c = m.case(7);
        assert_eq!((c.emitter, c.snr_index, c.run), (1, 0, 1));
        assert_eq!(m.case(23).emitter, 3);
    }

    #[test]
    fn splits_use_disjoint_streams() {
        let m = tiny();
        let c = m.case(1);
        let keys: Vec<u64> = Split::ALL
            .iter()
            .map(|&s| m.window_spec(s, &c).rng_seed)
            .collect();
        assert!(keys[0] != keys[1] && keys[1] != keys[2] && keys[0] != keys[2]);
    }

    #[test]
    fn persisted_store_round_trips() {
        let ds = build_dataset(&tiny()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        persist_dataset(&ds, dir.path()).unwrap();
        assert!(dir.path().join("test/3_2.bsp").exists());
        let back = load_dataset(dir.path()).unwrap();
        assert_eq!(back.manifest, ds.manifest);
        for split in Split::ALL {
            for (a, b) in back.split(split).iter().zip(ds.split(split)) {
                assert_eq!(
                    (a.case_id, a.index, a.item.label),
                    (b.case_id, b.index, b.item.label)
                );
                assert_eq!(a.item.image.pixels, b.item.image.pixels);
            }
        }
    }

    #[test]
    fn invalid_manifest_rejected() {
        let mut m = tiny();
        m.subsample_length = 42;
        assert!(build_dataset(&m).is_err());
    }
}
