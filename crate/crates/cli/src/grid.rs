//! `start:stop:step` and `start:stop:count` grids.

use std::str::FromStr;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub start: f64,
    pub stop: f64,
    /// Step or point count, depending on how the grid is read.
    pub third: f64,
}

impl FromStr for GridSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("grid `{s}` is not of the form start:stop:step"));
        }
        let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("grid `{s}`: {e}"));
        let g = GridSpec {
            start: num(parts[0])?,
            stop: num(parts[1])?,
            third: num(parts[2])?,
        };
        if !(g.start.is_finite() && g.stop.is_finite() && g.third.is_finite()) {
            return Err(format!("grid `{s}` has non-finite entries"));
        }
        if g.stop < g.start {
            return Err(format!("grid `{s}` runs backwards"));
        }
        Ok(g)
    }
}

/// Drops the rounding noise of `start + i * step` so printed grid values
/// read as typed.
fn tidy(x: f64) -> f64 {
    (x * 1e12).round() / 1e12
}

impl GridSpec {
    /// `start, start + step, ...` up to `stop`; the last point is kept when
    /// it overshoots `stop` by rounding only.
    pub fn by_step(&self) -> Result<Vec<f64>, String> {
        if !(self.third > 0.0) {
            return Err("grid step must be positive".into());
        }
        let span = (self.stop - self.start) / self.third;
        let n = (span + 1e-9).floor() as usize;
        Ok((0..=n).map(|i| tidy(self.start + i as f64 * self.third)).collect())
    }

    /// `count` evenly spaced points including both ends.
    pub fn by_count(&self) -> Result<Vec<f64>, String> {
        if !(self.third >= 1.0) || self.third.fract() != 0.0 {
            return Err("grid count must be a positive integer".into());
        }
        let n = self.third as usize;
        if n == 1 {
            return Ok(vec![self.start]);
        }
        let h = (self.stop - self.start) / (n - 1) as f64;
        Ok((0..n).map(|i| if i + 1 == n { self.stop } else { self.start + i as f64 * h }).collect())
    }

    pub fn points(&self, count: bool) -> Result<Vec<f64>, String> {
        if count {
            self.by_count()
        } else {
            self.by_step()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn step_grid_keeps_endpoint() {
        let g: GridSpec = "2.0:4.0:0.1".parse().unwrap();
        let p = g.by_step().unwrap();
        assert_eq!(p.len(), 21);
        assert!((p[20] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn count_grid() {
        let g: GridSpec = "0.7854:1.5708:20".parse().unwrap();
        let p = g.by_count().unwrap();
        assert_eq!(p.len(), 20);
        assert_eq!(p[19], 1.5708);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!("1:2".parse::<GridSpec>().is_err());
        assert!("2:1:0.1".parse::<GridSpec>().is_err());
        assert!("1:2:0".parse::<GridSpec>().unwrap().by_step().is_err());
        assert!("1:2:2.5".parse::<GridSpec>().unwrap().by_count().is_err());
    }
}
