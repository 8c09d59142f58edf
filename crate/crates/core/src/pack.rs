//! Feature pack files and class manifests.
//!
//! A pack is a text header followed by raw little-endian payloads:
//!
//! ```text
//! IFP1
//! version=1
//! image_id=<id>
//! class_id=<f>            (optional)
//! height=<H>
//! width=<W>
//! channels=<C>
//! delta=<δ>
//! zeta=<ζ>
//! rho=<ρ>
//! has_raster=0|1
//! has_labels=0|1
//! <other key=value lines>
//! <blank line>
//! raster    f32 x C*H*W   (if has_raster)
//! features  f32 x δ*ζ*ρ
//! labels    i32 x H*W     (if has_labels)
//! ```
//!
//! Multi-channel blocks are channel-major, each channel row-major.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::features::{region_features, FeatureMaps, Raster, Segmentation, SuperpixelMap};
use crate::model::write_atomic;
use crate::training::{validate_classes, ClassSpec};

pub const PACK_MAGIC: &str = "IFP1";
pub const PACK_VERSION: u32 = 1;
pub const PACK_EXTENSION: &str = "ifp";

const FIXED_KEYS: [&str; 11] = [
    "version", "image_id", "class_id", "height", "width", "channels", "delta", "zeta", "rho",
    "has_raster", "has_labels",
];

#[derive(Debug, Clone, PartialEq)]
pub struct FeaturePack {
    pub image_id: String,
    pub class_id: Option<usize>,
    /// Raster (and label map) resolution.
    pub height: usize,
    pub width: usize,
    /// Raster channels; 0 when the pack has no raster.
    pub channels: usize,
    pub delta: usize,
    pub zeta: usize,
    pub rho: usize,
    pub raster: Option<Vec<f32>>,
    pub features: Vec<f32>,
    pub labels: Option<Vec<i32>>,
    /// Additional header entries, kept in order.
    pub extra: Vec<(String, String)>,
}

impl FeaturePack {
    /// Checks that header dimensions and payloads agree.
    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidArgument(msg));
        if self.image_id.is_empty() || self.image_id.contains(['\n', '\r']) {
            return fail(format!("invalid image id {:?}", self.image_id));
        }
        if self.delta == 0 || self.zeta == 0 || self.rho == 0 {
            return fail(format!(
                "feature maps need positive dimensions, got {}x{}x{}",
                self.delta, self.zeta, self.rho
            ));
        }
        if self.features.len() != self.delta * self.zeta * self.rho {
            return fail(format!(
                "feature payload has {} values, header declares {}",
                self.features.len(),
                self.delta * self.zeta * self.rho
            ));
        }
        if self.raster.is_none() && self.labels.is_none() {
            return fail("pack carries neither a raster nor a superpixel map".into());
        }
        if self.height == 0 || self.width == 0 {
            return fail(format!("raster size must be positive, got {}x{}", self.height, self.width));
        }
        let plane = self.height * self.width;
        match &self.raster {
            Some(r) => {
                if self.channels == 0 {
                    return fail("raster has zero channels".into());
                }
                if r.len() != self.channels * plane {
                    return fail(format!(
                        "raster payload has {} values, header declares {}",
                        r.len(),
                        self.channels * plane
                    ));
                }
            }
            None if self.channels != 0 => {
                return fail("channels declared without a raster".into());
            }
            None => {}
        }
        if let Some(l) = &self.labels {
            if l.len() != plane {
                return fail(format!("label payload has {} values, header declares {plane}", l.len()));
            }
        }
        for (k, v) in &self.extra {
            if k.is_empty()
                || FIXED_KEYS.contains(&k.as_str())
                || k.contains(['=', '\n', '\r'])
                || v.contains(['\n', '\r'])
            {
                return fail(format!("invalid extra header entry {k:?}"));
            }
        }
        Ok(())
    }

    pub fn feature_maps(&self) -> Result<FeatureMaps> {
        FeatureMaps::new(
            self.delta,
            self.zeta,
            self.rho,
            self.features.iter().map(|&v| f64::from(v)).collect(),
        )
    }

    pub fn raster_data(&self) -> Result<Option<Raster>> {
        self.raster
            .as_ref()
            .map(|r| {
                Raster::new(
                    self.height,
                    self.width,
                    self.channels,
                    r.iter().map(|&v| f64::from(v)).collect(),
                )
            })
            .transpose()
    }

    pub fn superpixels(&self) -> Result<Option<SuperpixelMap>> {
        self.labels
            .as_ref()
            .map(|l| SuperpixelMap::from_i32(self.height, self.width, l))
            .transpose()
    }

    /// Region descriptors for this image. A stored label map takes
    /// precedence; otherwise the raster is segmented with SLIC.
    pub fn regions(&self, superpixels: usize, compactness: f64) -> Result<Vec<Vec<f64>>> {
        let maps = self.feature_maps()?;
        let regions = if let Some(sp) = self.superpixels()? {
            region_features(&maps, Segmentation::Labels(&sp))?
        } else {
            let raster = self.raster_data()?.ok_or_else(|| {
                Error::InvalidArgument("pack carries neither a raster nor a superpixel map".into())
            })?;
            region_features(
                &maps,
                Segmentation::Slic {
                    raster: &raster,
                    superpixels,
                    compactness,
                },
            )?
        };
        Ok(regions.into_iter().map(|f| f.vector).collect())
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        self.validate()?;
        let mut header = format!("{PACK_MAGIC}\nversion={PACK_VERSION}\nimage_id={}\n", self.image_id);
        if let Some(c) = self.class_id {
            header.push_str(&format!("class_id={c}\n"));
        }
        header.push_str(&format!(
            "height={}\nwidth={}\nchannels={}\ndelta={}\nzeta={}\nrho={}\nhas_raster={}\nhas_labels={}\n",
            self.height,
            self.width,
            self.channels,
            self.delta,
            self.zeta,
            self.rho,
            u8::from(self.raster.is_some()),
            u8::from(self.labels.is_some()),
        ));
        for (k, v) in &self.extra {
            header.push_str(&format!("{k}={v}\n"));
        }
        header.push('\n');

        let mut bytes = header.into_bytes();
        if let Some(r) = &self.raster {
            r.iter().for_each(|v| bytes.extend_from_slice(&v.to_le_bytes()));
        }
        self.features
            .iter()
            .for_each(|v| bytes.extend_from_slice(&v.to_le_bytes()));
        if let Some(l) = &self.labels {
            l.iter().for_each(|v| bytes.extend_from_slice(&v.to_le_bytes()));
        }
        Ok(bytes)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut pos = 0;
        let mut next_line = || -> Result<&str> {
            let rest = &bytes[pos..];
            let end = rest
                .iter()
                .position(|&b| b == b'\n')
                .ok_or_else(|| Error::Format("pack header is not terminated".into()))?;
            pos += end + 1;
            std::str::from_utf8(&rest[..end])
                .map_err(|_| Error::Format("pack header is not valid UTF-8".into()))
        };
        if next_line()? != PACK_MAGIC {
            return Err(Error::Format(format!("missing {PACK_MAGIC} magic line")));
        }
        let mut entries: Vec<(String, String)> = Vec::new();
        loop {
            let line = next_line()?;
            if line.is_empty() {
                break;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Format(format!("malformed header line {line:?}")))?;
            if entries.iter().any(|(seen, _)| seen == k) {
                return Err(Error::Format(format!("duplicate header key {k:?}")));
            }
            entries.push((k.to_string(), v.to_string()));
        }

        let get = |key: &str| entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str());
        let require = |key: &str| get(key).ok_or_else(|| Error::Format(format!("missing header key {key:?}")));
        let number = |key: &str| -> Result<usize> {
            require(key)?
                .parse()
                .map_err(|_| Error::Format(format!("header key {key:?} is not a count")))
        };
        let flag = |key: &str| -> Result<bool> {
            match require(key)? {
                "0" => Ok(false),
                "1" => Ok(true),
                other => Err(Error::Format(format!("header flag {key:?} must be 0 or 1, got {other:?}"))),
            }
        };
        let version = require("version")?;
        if version != PACK_VERSION.to_string() {
            return Err(Error::Format(format!("unsupported pack version {version:?}")));
        }
        let class_id = get("class_id")
            .map(|v| v.parse().map_err(|_| Error::Format(format!("invalid class id {v:?}"))))
            .transpose()?;
        let (height, width, channels) = (number("height")?, number("width")?, number("channels")?);
        let (delta, zeta, rho) = (number("delta")?, number("zeta")?, number("rho")?);
        let (has_raster, has_labels) = (flag("has_raster")?, flag("has_labels")?);

        let plane = height
            .checked_mul(width)
            .ok_or_else(|| Error::Format("raster size overflows".into()))?;
        let raster_len = if has_raster { checked_len(&[channels, plane])? } else { 0 };
        let feature_len = checked_len(&[delta, zeta, rho])?;
        let label_len = if has_labels { plane } else { 0 };
        let payload = &bytes[pos..];
        let expected = checked_len(&[raster_len + feature_len + label_len, 4])?;
        if payload.len() != expected {
            return Err(Error::Corrupt(format!(
                "pack payload has {} bytes, header declares {expected}",
                payload.len()
            )));
        }
        let mut words = payload.chunks_exact(4).map(|c| [c[0], c[1], c[2], c[3]]);
        let raster = has_raster.then(|| words.by_ref().take(raster_len).map(f32::from_le_bytes).collect());
        let features = words.by_ref().take(feature_len).map(f32::from_le_bytes).collect();
        let labels = has_labels.then(|| words.by_ref().take(label_len).map(i32::from_le_bytes).collect());

        let extra = entries
            .iter()
            .filter(|(k, _)| !FIXED_KEYS.contains(&k.as_str()))
            .cloned()
            .collect();
        let pack = FeaturePack {
            image_id: require("image_id")?.to_string(),
            class_id,
            height,
            width,
            channels,
            delta,
            zeta,
            rho,
            raster,
            features,
            labels,
            extra,
        };
        pack.validate().map_err(|e| Error::Format(e.to_string()))?;
        Ok(pack)
    }
}

fn checked_len(factors: &[usize]) -> Result<usize> {
    factors
        .iter()
        .try_fold(1usize, |acc, &f| acc.checked_mul(f))
        .ok_or_else(|| Error::Format("payload size overflows".into()))
}

pub fn write_pack(path: &Path, pack: &FeaturePack) -> Result<()> {
    write_atomic(path, &pack.to_bytes()?)
}

pub fn read_pack(path: &Path) -> Result<FeaturePack> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    FeaturePack::from_bytes(&bytes)
}

/// Every `*.ifp` file in `dir`, sorted by file name. Errors name the
/// offending file.
pub fn read_pack_dir(dir: &Path) -> Result<Vec<(PathBuf, FeaturePack)>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.is_file() && p.extension().is_some_and(|x| x == PACK_EXTENSION))
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| match read_pack(&p) {
            Ok(pack) => Ok((p, pack)),
            Err(Error::Io { path, source }) => Err(Error::Io { path, source }),
            Err(Error::Corrupt(msg)) => Err(Error::Corrupt(format!("{}: {msg}", p.display()))),
            Err(e) => Err(Error::Format(format!("{}: {e}", p.display()))),
        })
        .collect()
}

/// Parses `class_id,name` lines. Blank lines and lines starting with `#`
/// are skipped; ids must be `1..=F` in order.
pub fn parse_manifest(text: &str) -> Result<Vec<ClassSpec>> {
    let mut classes = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (id, name) = line
            .split_once(',')
            .ok_or_else(|| Error::Format(format!("manifest line {}: expected `id,name`", n + 1)))?;
        let id = id
            .trim()
            .parse()
            .map_err(|_| Error::Format(format!("manifest line {}: bad class id {id:?}", n + 1)))?;
        let name = name.trim();
        if name.is_empty() {
            return Err(Error::Format(format!("manifest line {}: empty class name", n + 1)));
        }
        classes.push(ClassSpec { id, name: name.to_string() });
    }
    validate_classes(&classes).map_err(|e| Error::Format(format!("manifest: {e}")))?;
    Ok(classes)
}

pub fn read_manifest(path: &Path) -> Result<Vec<ClassSpec>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_manifest(&text)
}
