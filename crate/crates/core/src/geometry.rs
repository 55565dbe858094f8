//! Network layouts on a wrap-around square and the propagation model that turns
//! them into noise-normalized channel realizations.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::{Error, Result};
use crate::rng::{stream_rng, Stream};

/// Pathloss at the 1 m reference distance, in dB.
pub const PATHLOSS_REF_DB: f64 = -30.5;
/// Pathloss slope in dB per decade of distance.
pub const PATHLOSS_SLOPE_DB: f64 = 36.7;
/// Default shadow-fading standard deviation (dB).
pub const DEFAULT_SHADOW_SD_DB: f64 = 4.0;
/// Default receiver noise power (dBW).
pub const DEFAULT_NOISE_DBW: f64 = -130.0;
/// Default distance clamp (m).
pub const DEFAULT_D_MIN: f64 = 1.0;

pub type Point = [f64; 2];

#[derive(Debug, Clone, PartialEq)]
pub struct NetworkGeometry {
    pub ap_positions: Vec<Point>,
    pub ue_positions: Vec<Point>,
    pub side: f64,
}

impl NetworkGeometry {
    pub fn new(ap_positions: Vec<Point>, ue_positions: Vec<Point>, side: f64) -> Result<Self> {
        if side <= 0.0 || !side.is_finite() {
            return Err(Error::InvalidParameter {
                name: "side",
                reason: format!("must be positive, got {side}"),
            });
        }
        let inside = |p: &Point| p.iter().all(|&c| (0.0..side).contains(&c));
        if !ap_positions.iter().chain(&ue_positions).all(inside) {
            return Err(Error::InvalidParameter {
                name: "positions",
                reason: "coordinates must lie in [0, side)".into(),
            });
        }
        Ok(Self {
            ap_positions,
            ue_positions,
            side,
        })
    }

    pub fn num_aps(&self) -> usize {
        self.ap_positions.len()
    }

    pub fn num_ues(&self) -> usize {
        self.ue_positions.len()
    }

    /// Shifts every point by `offset`, modulo the side length.
    pub fn translated(&self, offset: Point) -> Self {
        let shift = |p: &Point| -> Point {
            [
                (p[0] + offset[0]).rem_euclid(self.side),
                (p[1] + offset[1]).rem_euclid(self.side),
            ]
        };
        Self {
            ap_positions: self.ap_positions.iter().map(shift).collect(),
            ue_positions: self.ue_positions.iter().map(shift).collect(),
            side: self.side,
        }
    }
}

/// Large-scale gains in linear scale, indexed `[ap][ue]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LargeScaleMap {
    pub beta: Vec<Vec<f64>>,
}

impl LargeScaleMap {
    pub fn num_aps(&self) -> usize {
        self.beta.len()
    }

    pub fn num_ues(&self) -> usize {
        self.beta.first().map_or(0, Vec::len)
    }
}

/// Channel gains `g[ap][ue]`, divided by the noise standard deviation when
/// `noise_normalized` is set so that every rate formula can assume unit noise.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub g: Vec<Vec<Complex64>>,
    pub beta: LargeScaleMap,
    pub noise_power: f64,
    pub noise_normalized: bool,
}

impl ChannelRealization {
    /// Wraps an explicit gain matrix (already noise-normalized) with a matching
    /// large-scale map. Mostly useful for crafted test cases.
    pub fn from_gains(g: Vec<Vec<Complex64>>, beta: Vec<Vec<f64>>) -> Self {
        Self {
            g,
            beta: LargeScaleMap { beta },
            noise_power: 1.0,
            noise_normalized: true,
        }
    }

    pub fn num_aps(&self) -> usize {
        self.g.len()
    }

    pub fn num_ues(&self) -> usize {
        self.g.first().map_or(0, Vec::len)
    }

    /// Real, nonnegative surrogate gains `sqrt(beta / sigma^2)`: the expected
    /// magnitude scale of `g` with small-scale fading averaged out.
    pub fn lsf_gains(&self) -> Vec<Vec<Complex64>> {
        let scale = if self.noise_normalized { self.noise_power } else { 1.0 };
        self.beta
            .beta
            .iter()
            .map(|row| row.iter().map(|&b| Complex64::new((b / scale).sqrt(), 0.0)).collect())
            .collect()
    }
}

/// Draws AP and UE positions i.i.d. uniform on `[0, side)^2`.
pub fn place_uniform(m_aps: usize, l_ues: usize, side: f64, seed: u64) -> Result<NetworkGeometry> {
    if l_ues < 1 || m_aps <= l_ues {
        return Err(Error::InvalidNetworkSize { m_aps, l_ues });
    }
    if side <= 0.0 || !side.is_finite() {
        return Err(Error::InvalidParameter {
            name: "side",
            reason: format!("must be positive, got {side}"),
        });
    }
    let mut rng = stream_rng(seed, Stream::Placement);
    let mut draw = |n: usize| -> Vec<Point> {
        (0..n)
            .map(|_| {
                // `random_range` on a half-open interval never returns `side`.
                [rng.random_range(0.0..side), rng.random_range(0.0..side)]
            })
            .collect()
    };
    let ap_positions = draw(m_aps);
    let ue_positions = draw(l_ues);
    Ok(NetworkGeometry {
        ap_positions,
        ue_positions,
        side,
    })
}

/// Torus distance between two points of the wrapped square.
pub fn wrap_distance(p: Point, q: Point, side: f64) -> f64 {
    let axis = |a: f64, b: f64| {
        let d = (a - b).abs();
        d.min(side - d)
    };
    axis(p[0], q[0]).hypot(axis(p[1], q[1]))
}

/// Pathloss in dB at distance `d` (clamped to `d_min`), without shadowing.
pub fn pathloss_db(d: f64, d_min: f64) -> f64 {
    PATHLOSS_REF_DB - PATHLOSS_SLOPE_DB * d.max(d_min).log10()
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Large-scale fading with log-normal shadowing. Shadowing terms are drawn in
/// `(ap, ue)` order from the shadowing stream, independently of the positions.
pub fn large_scale(geom: &NetworkGeometry, shadow_sd_db: f64, d_min: f64, seed: u64) -> Result<LargeScaleMap> {
    if shadow_sd_db < 0.0 || !shadow_sd_db.is_finite() {
        return Err(Error::InvalidParameter {
            name: "shadow_sd_db",
            reason: format!("must be nonnegative, got {shadow_sd_db}"),
        });
    }
    if d_min <= 0.0 {
        return Err(Error::InvalidParameter {
            name: "d_min",
            reason: format!("must be positive, got {d_min}"),
        });
    }
    let mut rng = stream_rng(seed, Stream::Shadowing);
    let shadow = Normal::new(0.0, shadow_sd_db).expect("validated standard deviation");
    let beta = geom
        .ap_positions
        .iter()
        .map(|&ap| {
            geom.ue_positions
                .iter()
                .map(|&ue| {
                    let d = wrap_distance(ap, ue, geom.side);
                    let f: f64 = shadow.sample(&mut rng);
                    db_to_linear(pathloss_db(d, d_min) + f)
                })
                .collect()
        })
        .collect();
    Ok(LargeScaleMap { beta })
}

/// Draws `h ~ CN(0, 1)` and returns `g = sqrt(beta / sigma^2) * h`.
pub fn draw_channel(lsmap: &LargeScaleMap, noise_power_dbw: f64, seed: u64) -> Result<ChannelRealization> {
    let noise_power = db_to_linear(noise_power_dbw);
    if !(noise_power > 0.0 && noise_power.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "noise_power_dbw",
            reason: format!("{noise_power_dbw} dBW is not a usable noise power"),
        });
    }
    let mut rng = stream_rng(seed, Stream::Fading);
    let half = std::f64::consts::FRAC_1_SQRT_2;
    let g = lsmap
        .beta
        .iter()
        .map(|row| {
            row.iter()
                .map(|&b| {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    Complex64::new(re * half, im * half) * (b / noise_power).sqrt()
                })
                .collect()
        })
        .collect();
    Ok(ChannelRealization {
        g,
        beta: lsmap.clone(),
        noise_power,
        noise_normalized: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_distance_examples() {
        assert!((wrap_distance([0.0, 0.0], [999.0, 0.0], 1000.0) - 1.0).abs() < 1e-12);
        assert_eq!(wrap_distance([3.0, 4.0], [3.0, 4.0], 10.0), 0.0);
        let d = wrap_distance([0.0, 0.0], [500.0, 500.0], 1000.0);
        assert!((d - 500.0 * 2f64.sqrt()).abs() < 1e-9);
        assert!((d - 707.1068).abs() < 1e-4);
    }

    #[test]
    fn pathloss_constants() {
        assert!((pathloss_db(1.0, 1.0) - (-30.5)).abs() < 1e-12);
        assert!((pathloss_db(100.0, 1.0) - (-103.9)).abs() < 1e-12);
        // clamp below d_min
        assert_eq!(pathloss_db(0.0, 1.0), pathloss_db(1.0, 1.0));
    }

    #[test]
    fn placement_rejects_bad_counts() {
        assert!(matches!(
            place_uniform(10, 10, 1000.0, 1),
            Err(Error::InvalidNetworkSize { .. })
        ));
        assert!(matches!(
            place_uniform(5, 0, 1000.0, 1),
            Err(Error::InvalidNetworkSize { .. })
        ));
        assert!(place_uniform(5, 2, 0.0, 1).is_err());
    }

    #[test]
    fn placement_in_square_and_deterministic() {
        let g = place_uniform(100, 10, 1000.0, 42).unwrap();
        assert_eq!(g.num_aps() + g.num_ues(), 110);
        assert!(g
            .ap_positions
            .iter()
            .chain(&g.ue_positions)
            .all(|p| p.iter().all(|&c| (0.0..1000.0).contains(&c))));
        assert_eq!(g, place_uniform(100, 10, 1000.0, 42).unwrap());
        assert_ne!(g, place_uniform(100, 10, 1000.0, 43).unwrap());
    }

    #[test]
    fn coincident_points_use_clamp() {
        let geom = NetworkGeometry::new(vec![[0.0, 0.0]], vec![[0.0, 0.0]], 1000.0).unwrap();
        let map = large_scale(&geom, 0.0, 1.0, 0).unwrap();
        assert!((10.0 * map.beta[0][0].log10() - (-30.5)).abs() < 1e-9);
    }

    #[test]
    fn noise_default_is_minus_130_dbw() {
        assert!((db_to_linear(DEFAULT_NOISE_DBW) - 1e-13).abs() < 1e-25);
    }

    #[test]
    fn channel_is_deterministic() {
        let geom = place_uniform(4, 2, 100.0, 3).unwrap();
        let map = large_scale(&geom, 4.0, 1.0, 3).unwrap();
        let a = draw_channel(&map, -130.0, 9).unwrap();
        let b = draw_channel(&map, -130.0, 9).unwrap();
        assert_eq!(a, b);
        assert!(map.beta.iter().flatten().all(|&b| b > 0.0 && b.is_finite()));
    }
}
