//! Color scales sampled from the d3-scale-chromatic definitions.
//!
//! Multi-hue scales are stored as 16 evenly spaced control points and
//! evaluated by per-channel linear interpolation.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Rgb {
    pub r: u8,
    pub g: u8,
    pub b: u8,
}

impl Rgb {
    pub const BLACK: Rgb = Rgb::new(0, 0, 0);
    pub const WHITE: Rgb = Rgb::new(255, 255, 255);

    pub const fn new(r: u8, g: u8, b: u8) -> Self {
        Rgb { r, g, b }
    }

    pub fn to_hex(self) -> String {
        format!("#{:02x}{:02x}{:02x}", self.r, self.g, self.b)
    }

    pub fn channels(self) -> [u8; 3] {
        [self.r, self.g, self.b]
    }

    /// Composites `self` at `alpha` over `base`.
    pub fn over(self, base: Rgb, alpha: f64) -> Rgb {
        let mix = |top: u8, bottom: u8| lerp_channel(bottom, top, alpha);
        Rgb::new(mix(self.r, base.r), mix(self.g, base.g), mix(self.b, base.b))
    }

    /// Scales every channel by `factor` (< 1 darkens).
    pub fn darken(self, factor: f64) -> Rgb {
        let f = |c: u8| (f64::from(c) * factor).round().clamp(0.0, 255.0) as u8;
        Rgb::new(f(self.r), f(self.g), f(self.b))
    }
}

impl fmt::Display for Rgb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl Serialize for Rgb {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.channels().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Rgb {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let [r, g, b] = <[u8; 3]>::deserialize(d)?;
        Ok(Rgb::new(r, g, b))
    }
}

fn lerp_channel(a: u8, b: u8, f: f64) -> u8 {
    let (a, b) = (f64::from(a), f64::from(b));
    (a + (b - a) * f).round().clamp(0.0, 255.0) as u8
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScaleId {
    Spectral,
    Blues,
    Viridis,
    Cividis,
    /// Colors switched off.
    None,
}

impl ScaleId {
    pub const ALL: [ScaleId; 5] =
        [ScaleId::Spectral, ScaleId::Blues, ScaleId::Viridis, ScaleId::Cividis, ScaleId::None];

    pub fn name(self) -> &'static str {
        match self {
            ScaleId::Spectral => "spectral",
            ScaleId::Blues => "blues",
            ScaleId::Viridis => "viridis",
            ScaleId::Cividis => "cividis",
            ScaleId::None => "none",
        }
    }

    pub fn scale(self) -> ColorScale {
        ColorScale::new(self)
    }
}

impl fmt::Display for ScaleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ScaleId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ScaleId::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| format!("unknown color scale `{s}` (expected spectral, blues, viridis, cividis or none)"))
    }
}

// d3.interpolateSpectral (basis spline over the 11-class ColorBrewer scheme) at t = k/15.
const SPECTRAL: [[u8; 3]; 16] = [
    [158, 1, 66],
    [193, 41, 73],
    [222, 77, 74],
    [240, 112, 74],
    [249, 152, 88],
    [253, 190, 112],
    [254, 221, 141],
    [253, 243, 169],
    [245, 250, 174],
    [224, 243, 161],
    [190, 229, 160],
    [148, 212, 164],
    [105, 189, 169],
    [72, 155, 179],
    [69, 117, 177],
    [94, 79, 162],
];

// d3.interpolateBlues at t = k/15.
const BLUES: [[u8; 3]; 16] = [
    [247, 251, 255],
    [234, 242, 251],
    [221, 234, 246],
    [207, 225, 242],
    [191, 217, 236],
    [171, 207, 230],
    [147, 195, 223],
    [121, 181, 217],
    [97, 167, 209],
    [75, 151, 201],
    [55, 135, 192],
    [38, 118, 182],
    [24, 100, 170],
    [13, 83, 154],
    [9, 66, 133],
    [8, 48, 107],
];

// d3.interpolateViridis at t = k/15.
const VIRIDIS: [[u8; 3]; 16] = [
    [68, 1, 84],
    [72, 26, 108],
    [71, 47, 125],
    [65, 68, 135],
    [57, 86, 140],
    [49, 104, 142],
    [42, 120, 142],
    [35, 136, 142],
    [31, 152, 139],
    [34, 168, 132],
    [53, 183, 121],
    [84, 197, 104],
    [122, 209, 81],
    [165, 219, 54],
    [210, 226, 27],
    [253, 231, 37],
];

// d3.interpolateCividis at t = k/15.
const CIVIDIS: [[u8; 3]; 16] = [
    [0, 32, 81],
    [2, 44, 101],
    [20, 56, 109],
    [43, 68, 110],
    [66, 80, 110],
    [87, 92, 110],
    [105, 105, 112],
    [120, 117, 115],
    [134, 130, 118],
    [148, 143, 120],
    [164, 157, 120],
    [182, 171, 115],
    [202, 186, 106],
    [224, 201, 93],
    [242, 217, 80],
    [253, 234, 69],
];

const NONE: [[u8; 3]; 2] = [[255, 255, 255], [255, 255, 255]];

/// A color scale with evenly spaced control points from t = 0 to t = 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ColorScale {
    pub id: ScaleId,
    colors: &'static [[u8; 3]],
}

impl ColorScale {
    pub fn new(id: ScaleId) -> Self {
        let colors: &'static [[u8; 3]] = match id {
            ScaleId::Spectral => &SPECTRAL,
            ScaleId::Blues => &BLUES,
            ScaleId::Viridis => &VIRIDIS,
            ScaleId::Cividis => &CIVIDIS,
            ScaleId::None => &NONE,
        };
        ColorScale { id, colors }
    }

    /// Control points as (t, color) with t = k / (count - 1).
    pub fn control_points(&self) -> Vec<(f64, Rgb)> {
        let last = (self.colors.len() - 1) as f64;
        self.colors
            .iter()
            .enumerate()
            .map(|(k, &[r, g, b])| (k as f64 / last, Rgb::new(r, g, b)))
            .collect()
    }

    /// Evaluates the scale at `t`, clamped to [0, 1]; NaN maps to 0.
    pub fn color(&self, t: f64) -> Rgb {
        let t = if t.is_nan() { 0.0 } else { t.clamp(0.0, 1.0) };
        let segments = self.colors.len() - 1;
        let pos = t * segments as f64;
        let k = (pos.floor() as usize).min(segments - 1);
        let f = pos - k as f64;
        let ([r0, g0, b0], [r1, g1, b1]) = (self.colors[k], self.colors[k + 1]);
        Rgb::new(lerp_channel(r0, r1, f), lerp_channel(g0, g1, f), lerp_channel(b0, b1, f))
    }
}

/// Evaluates `scale` at `t`.
pub fn scale_color(scale: &ColorScale, t: f64) -> Rgb {
    scale.color(t)
}
