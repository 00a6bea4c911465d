use std::collections::HashSet;

use crate::error::{Error, Result};

/// Radius of the outermost electrode in the projected plane.
pub const HEAD_SCALE: f64 = 0.9;

#[derive(Clone, Debug, PartialEq)]
pub struct Electrode {
    pub name: String,
    /// Radians, measured from the nasion direction toward the left ear.
    pub azimuth: f64,
    /// Radians from the vertex.
    pub polar: f64,
    /// Projected plane position (u toward the nose, v toward the left ear).
    pub position: [f64; 2],
}

/// Named electrodes on the head sphere with their azimuthal-equidistant projection.
#[derive(Clone, Debug, PartialEq)]
pub struct ElectrodeLayout {
    electrodes: Vec<Electrode>,
}

/// Azimuthal equidistant projection centred on the vertex: the plane radius
/// is proportional to the polar angle, scaled so `polar_max` lands on
/// [`HEAD_SCALE`].
pub fn project(polar: f64, azimuth: f64, polar_max: f64) -> [f64; 2] {
    let r = if polar_max > 0.0 { HEAD_SCALE * polar / polar_max } else { 0.0 };
    [r * azimuth.cos(), r * azimuth.sin()]
}

impl ElectrodeLayout {
    /// Build from (name, azimuth rad, polar rad) triples.
    pub fn from_spherical(entries: Vec<(String, f64, f64)>) -> Result<Self> {
        let mut seen = HashSet::new();
        for (name, _, polar) in &entries {
            if !seen.insert(name.as_str()) {
                return Err(Error::Input(format!("duplicate electrode name {name}")));
            }
            if !(0.0..=std::f64::consts::PI).contains(polar) {
                return Err(Error::Input(format!("polar angle of {name} outside [0, pi]")));
            }
        }
        let polar_max = entries.iter().map(|e| e.2).fold(0.0, f64::max);
        let electrodes = entries
            .into_iter()
            .map(|(name, azimuth, polar)| Electrode {
                position: project(polar, azimuth, polar_max),
                name,
                azimuth,
                polar,
            })
            .collect();
        Ok(Self { electrodes })
    }

    /// Parse a whitespace table of `name azimuth_deg polar_deg`; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let bad = || Error::Input(format!("layout line {}: expected `name azimuth polar`", lineno + 1));
            if fields.len() != 3 {
                return Err(bad());
            }
            let az: f64 = fields[1].parse().map_err(|_| bad())?;
            let polar: f64 = fields[2].parse().map_err(|_| bad())?;
            entries.push((fields[0].to_string(), az.to_radians(), polar.to_radians()));
        }
        Self::from_spherical(entries)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# name azimuth_deg polar_deg\n");
        for e in &self.electrodes {
            out.push_str(&format!("{} {} {}\n", e.name, e.azimuth.to_degrees(), e.polar.to_degrees()));
        }
        out
    }

    pub fn len(&self) -> usize {
        self.electrodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.electrodes.is_empty()
    }

    pub fn electrodes(&self) -> &[Electrode] {
        &self.electrodes
    }

    pub fn get(&self, i: usize) -> &Electrode {
        &self.electrodes[i]
    }

    pub fn names(&self) -> Vec<&str> {
        self.electrodes.iter().map(|e| e.name.as_str()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.electrodes.iter().position(|e| e.name.eq_ignore_ascii_case(name))
    }

    pub fn positions(&self) -> Vec<[f64; 2]> {
        self.electrodes.iter().map(|e| e.position).collect()
    }
}
