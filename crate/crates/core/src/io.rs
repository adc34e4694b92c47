//! JSON file formats for fields, sections, group sections, curves and atlases.
//!
//! Every file carries a `weight_exponent_convention` tag. Floats are written
//! in shortest round-trip form, so save/load cycles are bit-exact.

use std::fs;
use std::path::Path;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::atlas::{Atlas, AtlasDescriptor};
use crate::error::{Error, Result};
use crate::ladder::TimeSampledCurve;
use crate::lie::{GroupSection, MatrixGroup};
use crate::section::Section;
use crate::sobolev::{BandlimitedField, BoxRegion, GridDomain, Interpolation, SampledField, WeightConvention, Window};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandlimitedPayload {
    pub m: usize,
    pub modes: usize,
    pub components: usize,
    pub reality: bool,
    /// `[re, im]` pairs, component-major, `k` row-major from `−N` to `N`.
    pub coeffs: Vec<[f64; 2]>,
}

impl BandlimitedPayload {
    pub fn from_field(a: &BandlimitedField) -> Self {
        BandlimitedPayload {
            m: a.dim(),
            modes: a.modes(),
            components: a.components(),
            reality: a.is_real(),
            coeffs: a.coeffs().iter().map(|c| [c.re, c.im]).collect(),
        }
    }

    pub fn to_field(&self) -> Result<BandlimitedField> {
        let coeffs = self.coeffs.iter().map(|c| Complex64::new(c[0], c[1])).collect();
        BandlimitedField::from_coeffs(self.m, self.modes, self.components, coeffs, self.reality)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPayload {
    pub resolution: Vec<usize>,
    pub origin: Vec<f64>,
    /// `None` for the full torus.
    pub window: Option<BoxRegion>,
}

impl GridPayload {
    pub fn from_grid(g: &GridDomain) -> Self {
        GridPayload {
            resolution: g.resolution().to_vec(),
            origin: g.origin().to_vec(),
            window: match g.window() {
                Window::FullTorus => None,
                Window::Box(b) => Some(b.clone()),
            },
        }
    }

    pub fn to_grid(&self) -> Result<GridDomain> {
        let window = match &self.window {
            None => Window::FullTorus,
            Some(b) => Window::Box(b.clone()),
        };
        GridDomain::build(self.origin.clone(), self.resolution.clone(), window)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampledPayload {
    pub m: usize,
    pub components: usize,
    pub grid: GridPayload,
    /// Flat lattice indices of the masked nodes, in node order.
    pub mask: Vec<usize>,
    /// Node-major values.
    pub values: Vec<f64>,
    pub interpolation: Interpolation,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub spectral: Option<BandlimitedPayload>,
}

impl SampledPayload {
    pub fn from_field(v: &SampledField) -> Self {
        SampledPayload {
            m: v.domain().dim(),
            components: v.components(),
            grid: GridPayload::from_grid(v.domain()),
            mask: v.domain().mask(),
            values: v.values().to_vec(),
            interpolation: v.interpolation(),
            spectral: v.spectral().map(BandlimitedPayload::from_field),
        }
    }

    pub fn to_field(&self) -> Result<SampledField> {
        let grid = self.grid.to_grid()?;
        if grid.dim() != self.m {
            return Err(Error::Input(format!("grid dimension {} but m = {}", grid.dim(), self.m)));
        }
        if grid.mask() != self.mask {
            return Err(Error::Input("node mask does not match the grid window".into()));
        }
        let spectral = self.spectral.as_ref().map(BandlimitedPayload::to_field).transpose()?;
        let expected = if spectral.is_some() { Interpolation::Trigonometric } else { Interpolation::PiecewiseCubic };
        if expected != self.interpolation {
            return Err(Error::Input(format!(
                "interpolation tag {:?} inconsistent with the stored representative",
                self.interpolation
            )));
        }
        Ok(SampledField::new(grid, self.components, self.values.clone())?.with_spectral(spectral))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum FieldPayload {
    Bandlimited(BandlimitedPayload),
    Sampled(SampledPayload),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldFile {
    pub weight_exponent_convention: WeightConvention,
    #[serde(flatten)]
    pub field: FieldPayload,
}

impl FieldFile {
    pub fn bandlimited(a: &BandlimitedField, convention: WeightConvention) -> Self {
        FieldFile {
            weight_exponent_convention: convention,
            field: FieldPayload::Bandlimited(BandlimitedPayload::from_field(a)),
        }
    }

    pub fn sampled(v: &SampledField, convention: WeightConvention) -> Self {
        FieldFile {
            weight_exponent_convention: convention,
            field: FieldPayload::Sampled(SampledPayload::from_field(v)),
        }
    }
}

/// Resolves an atlas by name and resolution, or checks a supplied one.
fn resolve_atlas(name: &str, resolution: usize, hash: &str, atlas: Option<Arc<Atlas>>) -> Result<Arc<Atlas>> {
    let atlas = match atlas {
        Some(a) => a,
        None => Arc::new(Atlas::builtin(name, resolution)?),
    };
    if atlas.name() != name || atlas.resolution() != resolution {
        return Err(Error::Input(format!(
            "file refers to atlas {name}@{resolution}, got {}@{}",
            atlas.name(),
            atlas.resolution()
        )));
    }
    let actual = atlas.hash();
    if actual != hash {
        return Err(Error::Input(format!("atlas hash mismatch: file {hash}, atlas {actual}")));
    }
    Ok(atlas)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectionFile {
    pub weight_exponent_convention: WeightConvention,
    pub atlas: String,
    pub atlas_hash: String,
    pub resolution: usize,
    pub components: usize,
    pub tolerance: f64,
    pub interpolation: Vec<Interpolation>,
    pub pieces: Vec<SampledPayload>,
}

impl SectionFile {
    pub fn from_section(s: &Section, convention: WeightConvention) -> Self {
        SectionFile {
            weight_exponent_convention: convention,
            atlas: s.atlas().name().to_string(),
            atlas_hash: s.atlas().hash(),
            resolution: s.atlas().resolution(),
            components: s.components(),
            tolerance: s.tolerance(),
            interpolation: s.interpolation(),
            pieces: s.pieces().iter().map(SampledPayload::from_field).collect(),
        }
    }

    /// Rebuilds the section; `atlas` overrides the built-in lookup (its
    /// hash must still match).
    pub fn to_section(&self, atlas: Option<Arc<Atlas>>) -> Result<Section> {
        let atlas = resolve_atlas(&self.atlas, self.resolution, &self.atlas_hash, atlas)?;
        let pieces = self.pieces.iter().map(SampledPayload::to_field).collect::<Result<Vec<_>>>()?;
        let s = Section::from_pieces(atlas, pieces, self.tolerance)?;
        if s.components() != self.components {
            return Err(Error::Input(format!(
                "declared {} components, pieces carry {}",
                self.components,
                s.components()
            )));
        }
        Ok(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupSectionFile {
    pub weight_exponent_convention: WeightConvention,
    pub group: MatrixGroup,
    pub atlas: String,
    pub atlas_hash: String,
    pub resolution: usize,
    pub tolerance: f64,
    /// Per chart, per node, the matrix entries in row-major order.
    pub pieces: Vec<Vec<Vec<f64>>>,
}

impl GroupSectionFile {
    pub fn from_section(s: &GroupSection, convention: WeightConvention) -> Self {
        let pieces = s.pieces().iter().map(|p| p.iter().map(|g| g.transpose().as_slice().to_vec()).collect()).collect();
        GroupSectionFile {
            weight_exponent_convention: convention,
            group: s.group(),
            atlas: s.atlas().name().to_string(),
            atlas_hash: s.atlas().hash(),
            resolution: s.atlas().resolution(),
            tolerance: s.tolerance(),
            pieces,
        }
    }

    pub fn to_section(&self, atlas: Option<Arc<Atlas>>) -> Result<GroupSection> {
        let atlas = resolve_atlas(&self.atlas, self.resolution, &self.atlas_hash, atlas)?;
        let d = self.group.matrix_dim();
        let pieces = self
            .pieces
            .iter()
            .enumerate()
            .map(|(j, p)| {
                p.iter()
                    .enumerate()
                    .map(|(q, entries)| {
                        if entries.len() != d * d {
                            return Err(Error::Shape(format!(
                                "chart {j} node {q}: {} entries, expected {}",
                                entries.len(),
                                d * d
                            )));
                        }
                        Ok(DMatrix::from_row_slice(d, d, entries))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        GroupSection::from_pieces(atlas, self.group, pieces, self.tolerance)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveFile {
    pub weight_exponent_convention: WeightConvention,
    pub group: MatrixGroup,
    /// Uniform times `i/n`, `i = 0..=n`, or the single time 0 for a constant curve.
    pub times: Vec<f64>,
    pub samples: Vec<SectionFile>,
}

impl CurveFile {
    pub fn from_curve(c: &TimeSampledCurve, convention: WeightConvention) -> Self {
        CurveFile {
            weight_exponent_convention: convention,
            group: c.group(),
            times: c.times(),
            samples: c.samples().iter().map(|s| SectionFile::from_section(s, convention)).collect(),
        }
    }

    pub fn to_curve(&self, atlas: Option<Arc<Atlas>>) -> Result<TimeSampledCurve> {
        if self.times.len() != self.samples.len() {
            return Err(Error::Input(format!("{} times for {} samples", self.times.len(), self.samples.len())));
        }
        let n = self.times.len().saturating_sub(1).max(1) as f64;
        for (i, t) in self.times.iter().enumerate() {
            let expected = if self.times.len() == 1 { 0.0 } else { i as f64 / n };
            if (t - expected).abs() > 1e-12 {
                return Err(Error::Input(format!("time grid must be uniform on [0, 1]; entry {i} is {t}")));
            }
        }
        let first = self.samples.first().ok_or_else(|| Error::Input("a curve needs at least one sample".into()))?;
        let atlas = resolve_atlas(&first.atlas, first.resolution, &first.atlas_hash, atlas)?;
        let samples = self.samples.iter().map(|s| s.to_section(Some(atlas.clone()))).collect::<Result<Vec<_>>>()?;
        TimeSampledCurve::new(self.group, samples)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AtlasFile {
    pub weight_exponent_convention: WeightConvention,
    #[serde(flatten)]
    pub descriptor: AtlasDescriptor,
}

impl AtlasFile {
    pub fn from_atlas(a: &Atlas, convention: WeightConvention) -> Self {
        AtlasFile { weight_exponent_convention: convention, descriptor: a.descriptor() }
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn from_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    Ok(serde_json::from_str(text)?)
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    fs::write(path, to_json(value)?)?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    from_json(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::{exp_section, random_algebra_section};
    use crate::probe::suite_rng;
    use crate::sobolev::restrict;

    #[test]
    fn field_round_trip_is_exact() {
        let mut rng = suite_rng(40, "io-field");
        let a = BandlimitedField::random(2, 4, 2, 1.0, &mut rng).unwrap();
        let text = to_json(&FieldFile::bandlimited(&a, WeightConvention::Standard)).unwrap();
        assert!(text.contains("\"kind\": \"bandlimited\""));
        assert!(text.contains("\"weight_exponent_convention\": \"standard-s\""));
        let back: FieldFile = from_json(&text).unwrap();
        match back.field {
            FieldPayload::Bandlimited(p) => assert_eq!(p.to_field().unwrap(), a),
            _ => panic!("wrong kind"),
        }
        let win = GridDomain::boxed(BoxRegion::cube(0.5, 2.5, 2).unwrap(), 33).unwrap();
        let v = restrict(&a, &win).unwrap();
        let text = to_json(&FieldFile::sampled(&v, WeightConvention::PaperHalf)).unwrap();
        let back: FieldFile = from_json(&text).unwrap();
        match back.field {
            FieldPayload::Sampled(p) => assert_eq!(p.to_field().unwrap(), v),
            _ => panic!("wrong kind"),
        }
    }

    #[test]
    fn section_and_group_round_trip() {
        let atlas = Arc::new(Atlas::circle2(65).unwrap());
        let mut rng = suite_rng(41, "io-section");
        let xi = random_algebra_section(atlas.clone(), MatrixGroup::So3, 3, 0.5, &mut rng).unwrap();
        let f = SectionFile::from_section(&xi, WeightConvention::PaperHalf);
        let back = from_json::<SectionFile>(&to_json(&f).unwrap()).unwrap().to_section(None).unwrap();
        assert_eq!(back.pieces(), xi.pieces());
        assert_eq!(back.interpolation(), xi.interpolation());

        let g = exp_section(MatrixGroup::So3, &xi).unwrap();
        let f = GroupSectionFile::from_section(&g, WeightConvention::PaperHalf);
        let back = from_json::<GroupSectionFile>(&to_json(&f).unwrap()).unwrap().to_section(None).unwrap();
        assert_eq!(back.pieces(), g.pieces());

        let mut bad = f.clone();
        bad.atlas_hash = "00".into();
        assert!(bad.to_section(None).is_err());
    }

    #[test]
    fn curve_round_trip() {
        let atlas = Arc::new(Atlas::circle2(33).unwrap());
        let mut rng = suite_rng(42, "io-curve");
        let a = random_algebra_section(atlas.clone(), MatrixGroup::Su2, 2, 0.3, &mut rng).unwrap();
        let b = random_algebra_section(atlas, MatrixGroup::Su2, 2, 0.3, &mut rng).unwrap();
        let c = TimeSampledCurve::new(MatrixGroup::Su2, vec![a, b]).unwrap();
        let f = CurveFile::from_curve(&c, WeightConvention::PaperHalf);
        let back = from_json::<CurveFile>(&to_json(&f).unwrap()).unwrap().to_curve(None).unwrap();
        assert_eq!(back.samples()[1].pieces(), c.samples()[1].pieces());
    }

    #[test]
    fn atlas_file_carries_hash() {
        let a = Atlas::torus4(33).unwrap();
        let f = AtlasFile::from_atlas(&a, WeightConvention::PaperHalf);
        let text = to_json(&f).unwrap();
        let back: AtlasFile = from_json(&text).unwrap();
        assert_eq!(back.descriptor.hash, a.hash());
        assert_eq!(back.descriptor.compute_hash(), a.hash());
    }
}
