//! Problem definition: domain, fuel, wind, terrain, ignition geometry and
//! the affine map between physical and training coordinates.
//!
//! Physical quantities are SI (seconds, meters, m/s). Ignition cones are
//! given in scaled coordinates, the frame the network is trained in.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

const DEFAULT_FUEL_TABLE: &str = include_str!("../data/fuels.toml");

/// Default scaled extent of every axis.
pub const DEFAULT_TARGET_EXTENT: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Domain3 {
    pub t_min: f64,
    pub t_max: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Domain3 {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.t_min, self.t_max, self.x_min, self.x_max, self.y_min, self.y_max,
        ];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("domain bounds must be finite"));
        }
        if self.t_max <= self.t_min {
            return Err(Error::validation("domain requires t_max > t_min"));
        }
        if self.x_max <= self.x_min {
            return Err(Error::validation("domain requires x_max > x_min"));
        }
        if self.y_max <= self.y_min {
            return Err(Error::validation("domain requires y_max > y_min"));
        }
        Ok(())
    }

    pub fn contains_time(&self, t: f64) -> bool {
        t >= self.t_min && t <= self.t_max
    }
}

/// `scaled = (physical - offset) * factor`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxisMap {
    pub offset: f64,
    pub factor: f64,
}

impl AxisMap {
    pub const IDENTITY: AxisMap = AxisMap {
        offset: 0.0,
        factor: 1.0,
    };

    #[inline]
    pub fn scale(&self, p: f64) -> f64 {
        (p - self.offset) * self.factor
    }

    #[inline]
    pub fn unscale(&self, s: f64) -> f64 {
        s / self.factor + self.offset
    }
}

/// Per-axis affine map from physical `(t, x, y)` to training coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingTransform {
    pub t: AxisMap,
    pub x: AxisMap,
    pub y: AxisMap,
}

impl ScalingTransform {
    pub fn identity() -> Self {
        Self {
            t: AxisMap::IDENTITY,
            x: AxisMap::IDENTITY,
            y: AxisMap::IDENTITY,
        }
    }

    /// Maps each axis of `domain` onto `[0, target_extent]`.
    pub fn fit(domain: &Domain3, target_extent: f64) -> Result<Self> {
        if !(target_extent > 0.0 && target_extent.is_finite()) {
            return Err(Error::validation("target extent must be positive"));
        }
        domain.validate()?;
        let axis = |lo: f64, hi: f64| AxisMap {
            offset: lo,
            factor: target_extent / (hi - lo),
        };
        Ok(Self {
            t: axis(domain.t_min, domain.t_max),
            x: axis(domain.x_min, domain.x_max),
            y: axis(domain.y_min, domain.y_max),
        })
    }

    pub fn validate(&self) -> Result<()> {
        for (name, a) in [("t", self.t), ("x", self.x), ("y", self.y)] {
            if !(a.factor > 0.0 && a.factor.is_finite() && a.offset.is_finite()) {
                return Err(Error::validation(format!(
                    "scaling factor for {name} must be positive and finite"
                )));
            }
        }
        Ok(())
    }

    pub fn scale_point(&self, p: [f64; 3]) -> [f64; 3] {
        [self.t.scale(p[0]), self.x.scale(p[1]), self.y.scale(p[2])]
    }

    pub fn unscale_point(&self, s: [f64; 3]) -> [f64; 3] {
        [self.t.unscale(s[0]), self.x.unscale(s[1]), self.y.unscale(s[2])]
    }

    /// Multiplier taking a physical spread rate (m/s) to scaled units, using
    /// the x axis as the spatial reference: `S̃ = S · f_x / f_t`.
    pub fn spread_factor(&self) -> f64 {
        self.x.factor / self.t.factor
    }

    /// `f_y / f_x`; 1 for proportional scaling.
    pub fn aspect(&self) -> f64 {
        self.y.factor / self.x.factor
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FuelParameters {
    /// Zero-wind, zero-slope spread rate, m/s.
    pub r0: f64,
    pub wind_coeff: f64,
    pub wind_exp: f64,
    /// Cap on the normal wind component, m/s.
    pub wind_cap: f64,
    pub slope_coeff: f64,
    /// Fuel burn time, s.
    pub burn_time: f64,
    pub category: u8,
}

impl FuelParameters {
    pub fn validate(&self) -> Result<()> {
        let finite = [self.r0, self.wind_coeff, self.wind_exp, self.slope_coeff, self.burn_time]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.wind_cap.is_nan() {
            return Err(Error::validation("fuel parameters must be finite"));
        }
        if self.r0 < 0.0 {
            return Err(Error::validation("fuel r0 must be nonnegative"));
        }
        if self.wind_coeff < 0.0 || self.slope_coeff < 0.0 {
            return Err(Error::validation("fuel coefficients c and d must be nonnegative"));
        }
        if self.wind_exp <= 0.0 {
            return Err(Error::validation("fuel wind exponent b must be positive"));
        }
        if self.wind_cap <= 0.0 {
            return Err(Error::validation("fuel wind cap e must be positive"));
        }
        if self.burn_time <= 0.0 {
            return Err(Error::validation("fuel burn time tf must be positive"));
        }
        Ok(())
    }

    /// Row `category` (1-13) of the bundled default fuel table.
    pub fn from_table(category: u8) -> Result<Self> {
        default_fuel_table()?
            .into_iter()
            .find(|f| f.category == category)
            .ok_or_else(|| Error::validation(format!("no fuel category {category} in table")))
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FuelTableFile {
    fuel: Vec<FuelRow>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FuelRow {
    category: u8,
    r0: f64,
    c: f64,
    b: f64,
    e: f64,
    d: f64,
    tf: f64,
}

/// Parses a fuel table document (`[[fuel]]` rows with category, r0, c, b, e, d, tf).
pub fn parse_fuel_table(text: &str) -> Result<Vec<FuelParameters>> {
    let file: FuelTableFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    file.fuel
        .into_iter()
        .map(|r| {
            let f = FuelParameters {
                r0: r.r0,
                wind_coeff: r.c,
                wind_exp: r.b,
                wind_cap: r.e,
                slope_coeff: r.d,
                burn_time: r.tf,
                category: r.category,
            };
            f.validate().map(|_| f)
        })
        .collect()
}

pub fn default_fuel_table() -> Result<Vec<FuelParameters>> {
    parse_fuel_table(DEFAULT_FUEL_TABLE)
}

/// Bivariate polynomial `Σ c[i][j] x^i y^j`, `0 ≤ i, j ≤ degree`, with
/// coefficients stored row-major (`i` is the row).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Poly2 {
    pub degree: usize,
    pub coeffs: Vec<f64>,
}

impl Poly2 {
    pub fn zero() -> Self {
        Self::constant(0.0)
    }

    pub fn constant(c: f64) -> Self {
        Self {
            degree: 0,
            coeffs: vec![c],
        }
    }

    pub fn new(degree: usize, coeffs: Vec<f64>) -> Result<Self> {
        let n = (degree + 1) * (degree + 1);
        if coeffs.len() != n {
            return Err(Error::validation(format!(
                "degree-{degree} polynomial needs {n} coefficients, got {}",
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::validation("polynomial coefficients must be finite"));
        }
        Ok(Self { degree, coeffs })
    }

    #[inline]
    fn c(&self, i: usize, j: usize) -> f64 {
        self.coeffs[i * (self.degree + 1) + j]
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let d = self.degree;
        let mut acc = 0.0;
        for i in (0..=d).rev() {
            let mut row = 0.0;
            for j in (0..=d).rev() {
                row = row * y + self.c(i, j);
            }
            acc = acc * x + row;
        }
        acc
    }

    pub fn gradient(&self, x: f64, y: f64) -> [f64; 2] {
        let d = self.degree;
        let (mut gx, mut gy) = (0.0, 0.0);
        for i in 0..=d {
            for j in 0..=d {
                let c = self.c(i, j);
                if c == 0.0 {
                    continue;
                }
                if i > 0 {
                    gx += c * i as f64 * x.powi(i as i32 - 1) * y.powi(j as i32);
                }
                if j > 0 {
                    gy += c * j as f64 * x.powi(i as i32) * y.powi(j as i32 - 1);
                }
            }
        }
        [gx, gy]
    }

    /// Least-squares fit of total degree `degree` to `(x, y, z)` samples.
    /// The fit is done in centered, normalized coordinates and expanded back.
    pub fn fit(samples: &[[f64; 3]], degree: usize) -> Result<Self> {
        let terms: Vec<(usize, usize)> = (0..=degree)
            .flat_map(|i| (0..=degree - i).map(move |j| (i, j)))
            .collect();
        if samples.len() < terms.len() {
            return Err(Error::validation(format!(
                "degree-{degree} fit needs at least {} samples, got {}",
                terms.len(),
                samples.len()
            )));
        }
        let (cx, sx) = center_scale(samples.iter().map(|s| s[0]));
        let (cy, sy) = center_scale(samples.iter().map(|s| s[1]));
        let a = nalgebra::DMatrix::from_fn(samples.len(), terms.len(), |r, c| {
            let (i, j) = terms[c];
            ((samples[r][0] - cx) / sx).powi(i as i32) * ((samples[r][1] - cy) / sy).powi(j as i32)
        });
        let z = nalgebra::DVector::from_iterator(samples.len(), samples.iter().map(|s| s[2]));
        let sol = a
            .svd(true, true)
            .solve(&z, 1e-12)
            .map_err(|e| Error::validation(format!("terrain fit failed: {e}")))?;

        // expand Σ k_ij ((x-cx)/sx)^i ((y-cy)/sy)^j into raw monomials
        let n = degree + 1;
        let mut coeffs = vec![0.0; n * n];
        for (t, &(i, j)) in terms.iter().enumerate() {
            let k = sol[t] / (sx.powi(i as i32) * sy.powi(j as i32));
            for p in 0..=i {
                let xp = binomial(i, p) * (-cx).powi((i - p) as i32);
                for q in 0..=j {
                    let yq = binomial(j, q) * (-cy).powi((j - q) as i32);
                    coeffs[p * n + q] += k * xp * yq;
                }
            }
        }
        Self::new(degree, coeffs)
    }
}

fn center_scale(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let (lo, hi) = values
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let half = 0.5 * (hi - lo);
    (0.5 * (hi + lo), if half > 0.0 { half } else { 1.0 })
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, r| acc * (n - r) as f64 / (r + 1) as f64)
}

/// Wind `(u, v)` in m/s as polynomials in physical `(x, y)` with an
/// optional polynomial time dependence: `u = Σ_k t^k P_k(x, y)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindModel {
    pub u: Vec<Poly2>,
    pub v: Vec<Poly2>,
}

impl WindModel {
    pub fn calm() -> Self {
        Self::uniform(0.0, 0.0)
    }

    pub fn uniform(u: f64, v: f64) -> Self {
        Self {
            u: vec![Poly2::constant(u)],
            v: vec![Poly2::constant(v)],
        }
    }

    pub fn at(&self, x: f64, y: f64, t: f64) -> [f64; 2] {
        let series = |ps: &[Poly2]| ps.iter().rev().fold(0.0, |acc, p| acc * t + p.eval(x, y));
        [series(&self.u), series(&self.v)]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TerrainModel {
    pub z: Poly2,
}

impl TerrainModel {
    pub fn flat() -> Self {
        Self { z: Poly2::zero() }
    }

    pub fn elevation(&self, x: f64, y: f64) -> f64 {
        self.z.eval(x, y)
    }

    pub fn gradient(&self, x: f64, y: f64) -> [f64; 2] {
        self.z.gradient(x, y)
    }
}

/// `√((a(x−x0))² + (b(y−y0))²) − h` in scaled coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Cone {
    pub x0: f64,
    pub y0: f64,
    pub a: f64,
    pub b: f64,
    pub h: f64,
}

impl Cone {
    #[inline]
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        (self.a * (x - self.x0)).hypot(self.b * (y - self.y0)) - self.h
    }
}

/// Ignition as one or more elliptical cones. Several cones combine by
/// pointwise minimum; that path is experimental.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IgnitionShape {
    pub cones: Vec<Cone>,
}

impl IgnitionShape {
    pub fn single(cone: Cone) -> Self {
        Self { cones: vec![cone] }
    }

    pub fn validate(&self) -> Result<()> {
        if self.cones.is_empty() {
            return Err(Error::validation("at least one ignition cone is required"));
        }
        for c in &self.cones {
            if [c.x0, c.y0, c.a, c.b, c.h].iter().any(|v| !v.is_finite()) {
                return Err(Error::validation("ignition parameters must be finite"));
            }
            if c.a <= 0.0 || c.b <= 0.0 {
                return Err(Error::validation("axis scale must be positive"));
            }
            if c.h <= 0.0 {
                return Err(Error::validation("ignition offset h must be positive"));
            }
        }
        Ok(())
    }
}

/// Initial level-set value at scaled `(x, y)`: minimum over the ignition cones.
pub fn initial_levelset(shape: &IgnitionShape, x: f64, y: f64) -> f64 {
    shape
        .cones
        .iter()
        .map(|c| c.eval(x, y))
        .fold(f64::INFINITY, f64::min)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub domain: Domain3,
    pub scaling: ScalingTransform,
    pub fuel: FuelParameters,
    pub wind: WindModel,
    pub terrain: TerrainModel,
    pub ignition: IgnitionShape,
    pub viscosity_eps: f64,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        self.domain.validate()?;
        self.scaling.validate()?;
        self.fuel.validate()?;
        self.ignition.validate()?;
        if !(self.viscosity_eps >= 0.0 && self.viscosity_eps.is_finite()) {
            return Err(Error::validation("viscosity_eps must be nonnegative"));
        }
        let [[_, _], [x_lo, x_hi], [y_lo, y_hi]] = self.scaled_box();
        for c in &self.ignition.cones {
            if c.x0 < x_lo || c.x0 > x_hi || c.y0 < y_lo || c.y0 > y_hi {
                return Err(Error::validation(format!(
                    "ignition center ({}, {}) lies outside the scaled domain [{x_lo}, {x_hi}] x [{y_lo}, {y_hi}]",
                    c.x0, c.y0
                )));
            }
        }
        // wind and terrain are polynomials: finite wherever coefficients are
        let probe = self.wind.at(self.domain.x_min, self.domain.y_min, self.domain.t_min);
        if probe.iter().any(|v| !v.is_finite()) {
            return Err(Error::validation("wind model is not finite on the domain"));
        }
        Ok(())
    }

    /// Scaled `[t, x, y]` bounds of the domain.
    pub fn scaled_box(&self) -> [[f64; 2]; 3] {
        let s = &self.scaling;
        let d = &self.domain;
        [
            [s.t.scale(d.t_min), s.t.scale(d.t_max)],
            [s.x.scale(d.x_min), s.x.scale(d.x_max)],
            [s.y.scale(d.y_min), s.y.scale(d.y_max)],
        ]
    }

    /// Initial level set at a physical point.
    pub fn initial_levelset_at(&self, x: f64, y: f64) -> f64 {
        initial_levelset(&self.ignition, self.scaling.x.scale(x), self.scaling.y.scale(y))
    }

    /// SHA-256 of the canonical JSON form, hex encoded.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("scenario serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    #[serde(default)]
    viscosity_eps: f64,
    domain: Domain3,
    #[serde(default)]
    scaling: ScalingSection,
    fuel: FuelSection,
    wind: Option<WindSection>,
    terrain: Option<TerrainSection>,
    ignition: Vec<Cone>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScalingSection {
    #[serde(default = "default_extent")]
    target_extent: f64,
    #[serde(default)]
    identity: bool,
}

impl Default for ScalingSection {
    fn default() -> Self {
        Self {
            target_extent: DEFAULT_TARGET_EXTENT,
            identity: false,
        }
    }
}

fn default_extent() -> f64 {
    DEFAULT_TARGET_EXTENT
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FuelSection {
    category: Option<u8>,
    r0: Option<f64>,
    c: Option<f64>,
    b: Option<f64>,
    e: Option<f64>,
    d: Option<f64>,
    tf: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WindSection {
    degree: usize,
    #[serde(default)]
    time_degree: usize,
    u_poly: Vec<f64>,
    v_poly: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct TerrainSection {
    degree: usize,
    z_poly: Vec<f64>,
}

fn split_time_series(degree: usize, time_degree: usize, coeffs: Vec<f64>, name: &str) -> Result<Vec<Poly2>> {
    let per = (degree + 1) * (degree + 1);
    if coeffs.len() != per * (time_degree + 1) {
        return Err(Error::validation(format!(
            "{name} needs {} coefficients for degree {degree}, time_degree {time_degree}; got {}",
            per * (time_degree + 1),
            coeffs.len()
        )));
    }
    coeffs
        .chunks(per)
        .map(|c| Poly2::new(degree, c.to_vec()))
        .collect()
}

/// Parses and validates a scenario document.
pub fn load_scenario(text: &str) -> Result<ScenarioConfig> {
    let file: ScenarioFile = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    file.domain.validate()?;

    let scaling = if file.scaling.identity {
        ScalingTransform::identity()
    } else {
        ScalingTransform::fit(&file.domain, file.scaling.target_extent)?
    };

    let f = file.fuel;
    let base = match f.category {
        Some(cat) => Some(FuelParameters::from_table(cat)?),
        None => None,
    };
    let pick = |v: Option<f64>, from_base: Option<f64>, key: &str| {
        v.or(from_base)
            .ok_or_else(|| Error::validation(format!("fuel.{key} is required without a category")))
    };
    let fuel = FuelParameters {
        r0: pick(f.r0, base.map(|b| b.r0), "r0")?,
        wind_coeff: pick(f.c, base.map(|b| b.wind_coeff), "c")?,
        wind_exp: pick(f.b, base.map(|b| b.wind_exp), "b")?,
        wind_cap: pick(f.e, base.map(|b| b.wind_cap), "e")?,
        slope_coeff: pick(f.d, base.map(|b| b.slope_coeff), "d")?,
        burn_time: pick(f.tf, base.map(|b| b.burn_time), "tf")?,
        category: f.category.unwrap_or(0),
    };

    let wind = match file.wind {
        Some(w) => WindModel {
            u: split_time_series(w.degree, w.time_degree, w.u_poly, "wind.u_poly")?,
            v: split_time_series(w.degree, w.time_degree, w.v_poly, "wind.v_poly")?,
        },
        None => WindModel::calm(),
    };
    let terrain = match file.terrain {
        Some(t) => TerrainModel {
            z: Poly2::new(t.degree, t.z_poly)?,
        },
        None => TerrainModel::flat(),
    };

    let config = ScenarioConfig {
        domain: file.domain,
        scaling,
        fuel,
        wind,
        terrain,
        ignition: IgnitionShape {
            cones: file.ignition,
        },
        viscosity_eps: file.viscosity_eps,
    };
    config.validate()?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    const ONE_FIRE: &str = r#"
        [domain]
        t_min = 0.0
        t_max = 10.0
        x_min = 0.0
        x_max = 10.0
        y_min = 0.0
        y_max = 10.0

        [fuel]
        category = 3

        [[ignition]]
        x0 = 0.3
        y0 = 0.0
        a = 5.0
        b = 0.15
        h = 0.2
    "#;

    #[test]
    fn loads_one_fire_document() {
        let sc = load_scenario(ONE_FIRE).unwrap();
        assert_eq!(sc.scaling.x.factor, 1.0);
        assert_eq!(sc.ignition.cones.len(), 1);
        assert_eq!(sc.fuel.category, 3);
        assert_eq!(initial_levelset(&sc.ignition, 0.3, 0.0), -0.2);
    }

    #[test]
    fn rejects_zero_axis_scale() {
        let doc = ONE_FIRE.replace("a = 5.0", "a = 0.0");
        let err = load_scenario(&doc).unwrap_err().to_string();
        assert!(err.contains("axis scale must be positive"), "{err}");
    }

    #[test]
    fn rejects_ignition_outside_domain() {
        let doc = ONE_FIRE.replace("x0 = 0.3", "x0 = 12.0");
        assert!(matches!(load_scenario(&doc), Err(Error::Validation(_))));
    }

    #[test]
    fn rejects_unknown_keys_and_malformed_text() {
        let doc = ONE_FIRE.replace("t_min = 0.0", "t_min = 0.0\ntmax = 3.0");
        assert!(matches!(load_scenario(&doc), Err(Error::Parse(_))));
        assert!(matches!(load_scenario("[domain\n"), Err(Error::Parse(_))));
    }

    #[test]
    fn rejects_inverted_domain() {
        let doc = ONE_FIRE.replace("t_max = 10.0", "t_max = -1.0");
        assert!(load_scenario(&doc).is_err());
    }

    #[test]
    fn fuel_requires_values_without_category() {
        let doc = ONE_FIRE.replace("category = 3", "r0 = 0.1");
        assert!(load_scenario(&doc).unwrap_err().to_string().contains("fuel.c"));
    }

    #[test]
    fn cone_values() {
        let isom = IgnitionShape::single(Cone {
            x0: 5.0,
            y0: 5.0,
            a: 1.0,
            b: 0.7,
            h: 0.2,
        });
        assert_eq!(initial_levelset(&isom, 5.0, 5.0), -0.2);
        let two = IgnitionShape {
            cones: vec![
                Cone { x0: 0.0, y0: 0.0, a: 1.0, b: 1.0, h: 1.0 },
                Cone { x0: 4.0, y0: 0.0, a: 1.0, b: 1.0, h: 1.0 },
            ],
        };
        assert_eq!(initial_levelset(&two, 4.0, 0.0), -1.0);
        assert_eq!(initial_levelset(&two, 2.0, 0.0), 1.0);
    }

    #[test]
    fn fit_scaling_maps_midpoint() {
        let d = Domain3 { t_min: 0.0, t_max: 3600.0, x_min: 0.0, x_max: 5000.0, y_min: 0.0, y_max: 5000.0 };
        let s = ScalingTransform::fit(&d, 10.0).unwrap();
        assert_eq!(s.x.scale(2500.0), 5.0);
        assert_eq!(ScalingTransform::identity().scale_point([1.5, -2.0, 3.0]), [1.5, -2.0, 3.0]);
    }

    #[test]
    fn default_fuel_table_has_thirteen_categories() {
        let table = default_fuel_table().unwrap();
        assert_eq!(table.len(), 13);
        let cats: Vec<u8> = table.iter().map(|f| f.category).collect();
        assert_eq!(cats, (1..=13).collect::<Vec<_>>());
    }

    #[test]
    fn polynomial_eval_and_gradient() {
        // 1 + 2y + 3x + 4xy
        let p = Poly2::new(1, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(p.eval(2.0, 3.0), 1.0 + 6.0 + 6.0 + 24.0);
        assert_eq!(p.gradient(2.0, 3.0), [3.0 + 12.0, 2.0 + 8.0]);
    }

    #[test]
    fn quartic_terrain_fit_recovers_polynomial() {
        let truth = |x: f64, y: f64| 120.0 + 0.02 * x - 0.01 * y + 3e-6 * x * y - 2e-9 * x.powi(3) * y + 1e-12 * y.powi(4);
        let mut samples = Vec::new();
        for i in 0..15 {
            for j in 0..15 {
                let (x, y) = (i as f64 * 300.0, 1000.0 + j as f64 * 250.0);
                samples.push([x, y, truth(x, y)]);
            }
        }
        let fit = Poly2::fit(&samples, 4).unwrap();
        for &[x, y, z] in &samples {
            assert!((fit.eval(x, y) - z).abs() < 1e-6 * z.abs().max(1.0), "{} vs {z}", fit.eval(x, y));
        }
        assert!(Poly2::fit(&samples[..10], 4).is_err());
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = load_scenario(ONE_FIRE).unwrap();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.fuel.r0 += 1e-9;
        assert_ne!(a.hash(), b.hash());
    }
}
