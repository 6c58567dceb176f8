//! Parts lexicon: geometry, weight and mesh compatibility for every part
//! token, loaded from a versioned tab-separated data file.

use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

/// Data-file version accepted by [`load_catalogue`].
pub const CATALOGUE_VERSION: &str = "gearcat/1";

/// Carbon steel density used for shaft weights (kg/m^3).
pub const STEEL_DENSITY: f64 = 7850.0;

/// Shaft diameter (m).
pub const SHAFT_DIAMETER: f64 = 0.01;

const BUILTIN_DATA: &str = include_str!("../data/catalogue.tsv");

/// Every part token, in lexicon order. Token ids for parts follow this order.
pub const PART_NUMBERS: [&str; 44] = [
    "SH-*",
    "SH-100",
    "SH-200",
    "SH-300",
    "SH-400",
    "SH-500",
    "MRGF1.5-500",
    "MRGF2-500",
    "MRGF2.5-500",
    "MRGF3-500",
    "MSGA1.5-20",
    "MSGA1.5-40",
    "MSGA1.5-60",
    "MSGA1.5-80",
    "MSGA2-18",
    "MSGA2-25",
    "MSGA2-40",
    "MSGA2-60",
    "MSGA2.5-15",
    "MSGA2.5-40",
    "MSGA2.5-55",
    "MSGA2.5-70",
    "MSGA3-15",
    "MSGA3-30",
    "MSGA3-45",
    "MSGA3-60",
    "SBSG2-3020R",
    "SBSG2-2030L",
    "SBSG2-4020R",
    "SBSG2-2040L",
    "SBSG2-4515R",
    "SBSG2-1545L",
    "MMSG2-20R",
    "MMSG2-20L",
    "SWG1-R1",
    "AG1-20R1",
    "AG1-40R1",
    "AG1-60R1",
    "MHP1-3045L",
    "MHP1-2060L",
    "MHP1-1045L",
    "MHP1-0453R",
    "MHP1-0602R",
    "MHP1-0451R",
];

/// Index of a part in [`PART_NUMBERS`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PartId(pub u8);

impl PartId {
    pub const COUNT: usize = PART_NUMBERS.len();

    pub fn from_part_number(s: &str) -> Option<PartId> {
        PART_NUMBERS
            .iter()
            .position(|p| *p == s)
            .map(|i| PartId(i as u8))
    }

    pub fn part_number(self) -> &'static str {
        PART_NUMBERS[self.0 as usize]
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }

    pub fn all() -> impl Iterator<Item = PartId> {
        (0..PART_NUMBERS.len() as u8).map(PartId)
    }
}

impl fmt::Display for PartId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.part_number())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ComponentType {
    Shaft,
    Rack,
    SpurGear,
    BevelGear,
    MiterGear,
    Worm,
    WormWheel,
    HypoidPinion,
    HypoidRing,
}

impl ComponentType {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "shaft" => Self::Shaft,
            "rack" => Self::Rack,
            "spur" => Self::SpurGear,
            "bevel" => Self::BevelGear,
            "miter" => Self::MiterGear,
            "worm" => Self::Worm,
            "worm_wheel" => Self::WormWheel,
            "hypoid_pinion" => Self::HypoidPinion,
            "hypoid_ring" => Self::HypoidRing,
            _ => return None,
        })
    }

    /// Rotating toothed parts (everything except shafts and racks).
    pub fn is_rotary_gear(self) -> bool {
        !matches!(self, Self::Shaft | Self::Rack)
    }

    /// Worms and hypoid pinions have a pitch radius that is not module x teeth / 2.
    fn has_free_pitch_radius(self) -> bool {
        matches!(self, Self::Worm | Self::HypoidPinion)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Handedness {
    R,
    L,
    None,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PartRecord {
    pub id: PartId,
    pub component_type: ComponentType,
    pub module_mm: Option<f64>,
    pub teeth: Option<u32>,
    pub pitch_radius_m: Option<f64>,
    pub length_m: Option<f64>,
    /// Extent along the motion axis, then the two transverse extents.
    pub bbox_m: [f64; 3],
    pub weight_kg: f64,
    pub handedness: Handedness,
    pub mesh_partners: BTreeSet<PartId>,
}

impl PartRecord {
    pub fn part_number(&self) -> &'static str {
        self.id.part_number()
    }

    /// Pitch radius; zero for parts that have none.
    pub fn radius(&self) -> f64 {
        self.pitch_radius_m.unwrap_or(0.0)
    }

    pub fn length(&self) -> f64 {
        self.length_m.unwrap_or(0.0)
    }
}

#[derive(Debug, Error)]
pub enum CatalogueError {
    #[error("cannot read catalogue: {0}")]
    Io(#[from] std::io::Error),
    #[error("catalogue parse error: {0}")]
    Parse(String),
    #[error("unsupported catalogue version {found:?} (expected {CATALOGUE_VERSION:?})")]
    UnknownVersion { found: String },
    #[error("catalogue is missing part {0}")]
    MissingPart(&'static str),
    #[error("catalogue lists unexpected part {0:?}")]
    UnexpectedPart(String),
    #[error("catalogue lists part {0} twice")]
    DuplicatePart(&'static str),
    #[error("mesh partner list is asymmetric: {a} lists {b} but not the reverse")]
    AsymmetricMesh { a: &'static str, b: &'static str },
    #[error("parts {a} and {b} have different modules but are listed as mesh partners")]
    ModuleMismatch { a: &'static str, b: &'static str },
    #[error("invalid record for {part}: {reason}")]
    InvalidRecord { part: &'static str, reason: String },
    #[error("unknown part {0:?}")]
    UnknownPart(String),
    #[error("negative shaft length {0}")]
    NegativeLength(f64),
}

/// Immutable parts catalogue.
#[derive(Clone, Debug)]
pub struct Catalogue {
    parts: Vec<PartRecord>,
    version: String,
}

#[derive(Debug, Deserialize)]
struct RawRecord {
    part_number: String,
    #[serde(rename = "type")]
    kind: String,
    module_mm: String,
    teeth: String,
    pitch_radius_m: String,
    length_m: String,
    bbox_axial_m: String,
    bbox_t1_m: String,
    bbox_t2_m: String,
    weight_kg: String,
    handedness: String,
    partners: String,
}

/// Weight of a solid steel shaft of the standard diameter.
pub fn shaft_weight(length_m: f64) -> Result<f64, CatalogueError> {
    if length_m < 0.0 || length_m.is_nan() {
        return Err(CatalogueError::NegativeLength(length_m));
    }
    let r = SHAFT_DIAMETER / 2.0;
    Ok(STEEL_DENSITY * PI * r * r * length_m)
}

/// Reads and verifies a catalogue data file.
pub fn load_catalogue(path: impl AsRef<Path>) -> Result<Catalogue, CatalogueError> {
    let text = std::fs::read_to_string(path)?;
    Catalogue::parse(&text)
}

impl Catalogue {
    /// The catalogue shipped with the crate.
    pub fn builtin() -> Catalogue {
        Catalogue::parse(BUILTIN_DATA).expect("builtin catalogue is valid")
    }

    pub fn builtin_text() -> &'static str {
        BUILTIN_DATA
    }

    pub fn parse(text: &str) -> Result<Catalogue, CatalogueError> {
        let first = text.lines().next().unwrap_or("");
        let version = first
            .strip_prefix("#version=")
            .ok_or_else(|| CatalogueError::Parse("first line must be '#version=...'".into()))?
            .trim()
            .to_string();
        if version != CATALOGUE_VERSION {
            return Err(CatalogueError::UnknownVersion { found: version });
        }

        let mut reader = csv::ReaderBuilder::new()
            .delimiter(b'\t')
            .comment(Some(b'#'))
            .from_reader(text.as_bytes());
        let mut slots: Vec<Option<PartRecord>> = vec![None; PartId::COUNT];
        let mut raw_partners: Vec<Vec<String>> = vec![Vec::new(); PartId::COUNT];
        for row in reader.deserialize::<RawRecord>() {
            let raw = row.map_err(|e| CatalogueError::Parse(e.to_string()))?;
            let id = PartId::from_part_number(raw.part_number.trim())
                .ok_or_else(|| CatalogueError::UnexpectedPart(raw.part_number.clone()))?;
            if slots[id.index()].is_some() {
                return Err(CatalogueError::DuplicatePart(id.part_number()));
            }
            let (record, partners) = convert(id, &raw)?;
            slots[id.index()] = Some(record);
            raw_partners[id.index()] = partners;
        }

        let mut parts = Vec::with_capacity(PartId::COUNT);
        for (i, slot) in slots.into_iter().enumerate() {
            parts.push(slot.ok_or(CatalogueError::MissingPart(PART_NUMBERS[i]))?);
        }
        for (i, names) in raw_partners.iter().enumerate() {
            for name in names {
                let pid = PartId::from_part_number(name)
                    .ok_or_else(|| CatalogueError::UnknownPart(name.clone()))?;
                parts[i].mesh_partners.insert(pid);
            }
        }

        let cat = Catalogue { parts, version };
        cat.verify()?;
        Ok(cat)
    }

    fn verify(&self) -> Result<(), CatalogueError> {
        for p in &self.parts {
            let name = p.part_number();
            let bad = |reason: String| CatalogueError::InvalidRecord { part: name, reason };
            if !(p.weight_kg >= 0.0 && p.weight_kg.is_finite()) {
                return Err(bad(format!("weight {} is not a non-negative number", p.weight_kg)));
            }
            match p.component_type {
                ComponentType::Shaft => {
                    let len = p.length_m.ok_or_else(|| bad("shaft without length".into()))?;
                    let expected = shaft_weight(len)?;
                    if (p.weight_kg - expected).abs() > 1e-9 {
                        return Err(bad(format!("shaft weight {} != {}", p.weight_kg, expected)));
                    }
                    if !p.mesh_partners.is_empty() {
                        return Err(bad("shafts do not mesh".into()));
                    }
                }
                ComponentType::Rack => {
                    if p.module_mm.is_none() || p.length_m.is_none() {
                        return Err(bad("rack needs module and length".into()));
                    }
                }
                t => {
                    let (m, z, r) = match (p.module_mm, p.teeth, p.pitch_radius_m) {
                        (Some(m), Some(z), Some(r)) => (m, z, r),
                        _ => return Err(bad("gear needs module, teeth and pitch radius".into())),
                    };
                    if !(r > 0.0 && m > 0.0 && z > 0) {
                        return Err(bad("gear geometry must be positive".into()));
                    }
                    if !t.has_free_pitch_radius() && (2000.0 * r / m - z as f64).abs() > 1e-9 {
                        return Err(bad(format!("pitch radius {r} != module x teeth / 2000")));
                    }
                }
            }
            let solid = p.bbox_m.iter().all(|&e| e > 0.0);
            if !solid && p.id != PartId(0) {
                return Err(bad("bounding box extents must be positive".into()));
            }
        }

        for p in &self.parts {
            for &q in &p.mesh_partners {
                let other = self.part(q);
                if !other.mesh_partners.contains(&p.id) {
                    return Err(CatalogueError::AsymmetricMesh {
                        a: p.part_number(),
                        b: other.part_number(),
                    });
                }
                if p.module_mm != other.module_mm {
                    return Err(CatalogueError::ModuleMismatch {
                        a: p.part_number(),
                        b: other.part_number(),
                    });
                }
                if p.component_type == ComponentType::Rack
                    && other.component_type != ComponentType::SpurGear
                {
                    return Err(CatalogueError::InvalidRecord {
                        part: p.part_number(),
                        reason: format!("racks mesh only with spur gears, not {}", other.part_number()),
                    });
                }
            }
        }
        Ok(())
    }

    pub fn version(&self) -> &str {
        &self.version
    }

    pub fn part(&self, id: PartId) -> &PartRecord {
        &self.parts[id.index()]
    }

    pub fn parts(&self) -> &[PartRecord] {
        &self.parts
    }

    pub fn lookup(&self, part_number: &str) -> Result<&PartRecord, CatalogueError> {
        PartId::from_part_number(part_number)
            .map(|id| self.part(id))
            .ok_or_else(|| CatalogueError::UnknownPart(part_number.to_string()))
    }

    pub fn component_type(&self, id: PartId) -> ComponentType {
        self.part(id).component_type
    }

    /// True iff `b` is listed as a mesh partner of `a`.
    pub fn mesh_compatible(&self, a: PartId, b: PartId) -> bool {
        self.part(a).mesh_partners.contains(&b)
    }

    /// [`Catalogue::mesh_compatible`] by part number.
    pub fn mesh_compatible_by_name(&self, a: &str, b: &str) -> Result<bool, CatalogueError> {
        let a = self.lookup(a)?.id;
        let b = self.lookup(b)?.id;
        Ok(self.mesh_compatible(a, b))
    }

    pub fn total_weight(&self) -> f64 {
        self.parts.iter().map(|p| p.weight_kg).sum()
    }
}

fn convert(id: PartId, raw: &RawRecord) -> Result<(PartRecord, Vec<String>), CatalogueError> {
    let part = id.part_number();
    let bad = |reason: String| CatalogueError::InvalidRecord { part, reason };
    let opt_f64 = |field: &str, s: &str| -> Result<Option<f64>, CatalogueError> {
        match s.trim() {
            "-" | "" => Ok(None),
            v => v
                .parse::<f64>()
                .map(Some)
                .map_err(|_| bad(format!("{field}: not a number: {v:?}"))),
        }
    };
    let req_f64 = |field: &str, s: &str| -> Result<f64, CatalogueError> {
        opt_f64(field, s)?.ok_or_else(|| bad(format!("{field} is required")))
    };

    let component_type =
        ComponentType::parse(raw.kind.trim()).ok_or_else(|| bad(format!("unknown type {:?}", raw.kind)))?;
    let teeth = match raw.teeth.trim() {
        "-" | "" => None,
        v => Some(v.parse::<u32>().map_err(|_| bad(format!("teeth: {v:?}")))?),
    };
    let handedness = match raw.handedness.trim() {
        "R" => Handedness::R,
        "L" => Handedness::L,
        "none" | "-" => Handedness::None,
        v => return Err(bad(format!("handedness: {v:?}"))),
    };
    let partners = match raw.partners.trim() {
        "-" | "" => Vec::new(),
        v => v.split(',').map(|s| s.trim().to_string()).collect(),
    };
    let record = PartRecord {
        id,
        component_type,
        module_mm: opt_f64("module_mm", &raw.module_mm)?,
        teeth,
        pitch_radius_m: opt_f64("pitch_radius_m", &raw.pitch_radius_m)?,
        length_m: opt_f64("length_m", &raw.length_m)?,
        bbox_m: [
            req_f64("bbox_axial_m", &raw.bbox_axial_m)?,
            req_f64("bbox_t1_m", &raw.bbox_t1_m)?,
            req_f64("bbox_t2_m", &raw.bbox_t2_m)?,
        ],
        weight_kg: req_f64("weight_kg", &raw.weight_kg)?,
        handedness,
        mesh_partners: BTreeSet::new(),
    };
    Ok((record, partners))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn edit(f: impl Fn(&str) -> Option<String>) -> String {
        Catalogue::builtin_text()
            .lines()
            .filter_map(f)
            .collect::<Vec<_>>()
            .join("\n")
    }

    #[test]
    fn builtin_has_every_lexicon_part() {
        let cat = Catalogue::builtin();
        assert_eq!(cat.parts().len(), 44);
        assert_eq!(cat.version(), CATALOGUE_VERSION);
        let count = |t| cat.parts().iter().filter(|p| p.component_type == t).count();
        assert_eq!(count(ComponentType::Shaft), 6);
        assert_eq!(count(ComponentType::Rack), 4);
        assert_eq!(count(ComponentType::SpurGear), 16);
        assert_eq!(count(ComponentType::BevelGear), 6);
        assert_eq!(count(ComponentType::MiterGear), 2);
        assert_eq!(count(ComponentType::Worm), 1);
        assert_eq!(count(ComponentType::WormWheel), 3);
        assert_eq!(count(ComponentType::HypoidPinion), 3);
        assert_eq!(count(ComponentType::HypoidRing), 3);
    }

    #[test]
    fn shaft_weights() {
        assert_eq!(shaft_weight(0.0).unwrap(), 0.0);
        assert!((shaft_weight(0.1).unwrap() - 0.061654).abs() < 1e-6);
        let w1 = shaft_weight(0.1).unwrap();
        assert!((shaft_weight(0.5).unwrap() - 5.0 * w1).abs() < 1e-15);
        assert!(matches!(shaft_weight(-0.1), Err(CatalogueError::NegativeLength(_))));
        let cat = Catalogue::builtin();
        assert_eq!(cat.lookup("SH-*").unwrap().weight_kg, 0.0);
    }

    #[test]
    fn mesh_compatibility_examples() {
        let cat = Catalogue::builtin();
        assert!(cat.mesh_compatible_by_name("MRGF2-500", "MSGA2-40").unwrap());
        assert!(cat.mesh_compatible_by_name("MSGA2-18", "MSGA2-18").unwrap());
        assert!(!cat.mesh_compatible_by_name("MRGF1.5-500", "MSGA2-18").unwrap());
        assert!(cat.mesh_compatible_by_name("SBSG2-3020R", "SBSG2-2030L").unwrap());
        assert!(!cat.mesh_compatible_by_name("SBSG2-3020R", "SBSG2-2040L").unwrap());
        assert!(!cat.mesh_compatible_by_name("MRGF2-500", "MRGF2-500").unwrap());
        assert!(cat.mesh_compatible_by_name("SWG1-R1", "AG1-60R1").unwrap());
        assert!(matches!(
            cat.mesh_compatible_by_name("MSGA9-1", "MSGA2-18"),
            Err(CatalogueError::UnknownPart(_))
        ));
    }

    #[test]
    fn catalogue_invariants() {
        let cat = Catalogue::builtin();
        for p in cat.parts() {
            if let (Some(m), Some(z), Some(r)) = (p.module_mm, p.teeth, p.pitch_radius_m) {
                if !p.component_type.has_free_pitch_radius() {
                    assert_eq!((2000.0 * r / m).round() as u32, z, "{}", p.part_number());
                }
            }
            for &q in &p.mesh_partners {
                assert!(cat.mesh_compatible(q, p.id));
                assert_eq!(p.module_mm, cat.part(q).module_mm);
            }
        }
        let total = cat.total_weight();
        assert!(total > 0.0 && total.is_finite());
    }

    #[test]
    fn module_mismatch_rejected() {
        // MSGA2-40 lists MSGA3-30 (and the reverse, so symmetry holds).
        let text = edit(|l| {
            let mut cols: Vec<String> = l.split('\t').map(String::from).collect();
            if cols[0] == "MSGA2-40" || cols[0] == "MSGA3-30" {
                let other = if cols[0] == "MSGA2-40" { "MSGA3-30" } else { "MSGA2-40" };
                cols[11] = format!("{},{}", cols[11], other);
            }
            Some(cols.join("\t"))
        });
        assert!(matches!(Catalogue::parse(&text), Err(CatalogueError::ModuleMismatch { .. })));
    }

    #[test]
    fn missing_part_rejected() {
        let text = edit(|l| (!l.starts_with("SWG1-R1\t")).then(|| l.to_string()));
        // Partner lists still name SWG1-R1, but completeness is checked first.
        assert!(matches!(Catalogue::parse(&text), Err(CatalogueError::MissingPart("SWG1-R1"))));
    }

    #[test]
    fn asymmetric_mesh_rejected() {
        let text = edit(|l| {
            if l.starts_with("AG1-20R1\t") {
                let mut cols: Vec<&str> = l.split('\t').collect();
                cols[11] = "-";
                Some(cols.join("\t"))
            } else {
                Some(l.to_string())
            }
        });
        assert!(matches!(Catalogue::parse(&text), Err(CatalogueError::AsymmetricMesh { .. })));
    }

    #[test]
    fn unknown_version_and_garbage_rejected() {
        let text = Catalogue::builtin_text().replacen("gearcat/1", "gearcat/9", 1);
        assert!(matches!(Catalogue::parse(&text), Err(CatalogueError::UnknownVersion { .. })));
        assert!(matches!(Catalogue::parse("hello"), Err(CatalogueError::Parse(_))));
        let text = edit(|l| Some(l.replacen("MSGA2-18\tspur\t2.0", "MSGA2-18\tspur\ttwo", 1)));
        assert!(matches!(Catalogue::parse(&text), Err(CatalogueError::InvalidRecord { .. })));
    }

    #[test]
    fn load_from_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("cat.tsv");
        std::fs::write(&path, Catalogue::builtin_text()).unwrap();
        let cat = load_catalogue(&path).unwrap();
        assert_eq!(cat.parts().len(), 44);
        assert!(matches!(load_catalogue(dir.path().join("nope")), Err(CatalogueError::Io(_))));
    }
}
