use std::io::Write;

use serde::Serialize;

use super::{decide, ModelParams};
use crate::error::{Error, Result};
use crate::fmt::sig;

pub const SWEEP_HEADER: &str = "delta,f,h,p1,payoff_share,payoff_limit,grants_access";

/// One sample of the decision curves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepRow {
    pub delta: f64,
    pub f: f64,
    pub h: f64,
    pub p1: f64,
    pub payoff_share: f64,
    pub payoff_limit: f64,
    pub grants_access: bool,
}

/// `n` equally spaced points strictly inside (0, 1): `i / (n + 1)`.
pub fn interior_grid(n: usize) -> Vec<f64> {
    (1..=n).map(|i| i as f64 / (n + 1) as f64).collect()
}

/// Evaluates the decision at each grid point, in grid order.
pub fn sweep_delta(params: &ModelParams, grid: &[f64]) -> Result<Vec<SweepRow>> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    grid.iter()
        .map(|&delta| {
            let out = decide(delta, params)?;
            Ok(SweepRow {
                delta,
                f: out.f_value,
                h: out.h_value,
                p1: out.p1,
                payoff_share: out.payoff_share,
                payoff_limit: out.payoff_limit,
                grants_access: out.grants_access,
            })
        })
        .collect()
}

/// One cell of a `(gamma, delta)` phase diagram.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseCell {
    pub gamma: f64,
    pub delta: f64,
    pub h: f64,
    pub grants_access: bool,
}

/// Decision over the product of a gamma grid and a delta grid, gamma-major.
pub fn phase_grid(params: &ModelParams, delta_grid: &[f64], gamma_grid: &[f64]) -> Result<Vec<PhaseCell>> {
    if delta_grid.is_empty() || gamma_grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let mut cells = Vec::with_capacity(delta_grid.len() * gamma_grid.len());
    for &gamma in gamma_grid {
        let p = params.with_gamma(gamma)?;
        for &delta in delta_grid {
            let out = decide(delta, &p)?;
            cells.push(PhaseCell { gamma, delta, h: out.h_value, grants_access: out.grants_access });
        }
    }
    Ok(cells)
}

pub fn write_sweep_csv<W: Write>(mut w: W, rows: &[SweepRow]) -> Result<()> {
    writeln!(w, "{SWEEP_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            sig(r.delta, 9),
            sig(r.f, 9),
            sig(r.h, 9),
            sig(r.p1, 9),
            sig(r.payoff_share, 9),
            sig(r.payoff_limit, 9),
            r.grants_access
        )?;
    }
    Ok(())
}

pub fn write_phase_csv<W: Write>(mut w: W, cells: &[PhaseCell]) -> Result<()> {
    writeln!(w, "gamma,delta,h,grants_access")?;
    for c in cells {
        writeln!(w, "{},{},{},{}", sig(c.gamma, 9), sig(c.delta, 9), sig(c.h, 9), c.grants_access)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::thresholds;

    #[test]
    fn sign_pattern_on_fine_grid() {
        let p = ModelParams::proportional(0.5, 0.1).unwrap();
        let bar = thresholds(&p).unwrap().delta_bar;
        let rows = sweep_delta(&p, &interior_grid(1001)).unwrap();
        assert_eq!(rows.len(), 1001);
        for r in &rows {
            if r.delta < bar - 1e-9 {
                assert!(r.f > 0.0 && r.grants_access, "delta {}", r.delta);
            } else if r.delta > bar + 1e-9 {
                assert!(r.f < 0.0 && !r.grants_access, "delta {}", r.delta);
            }
        }
    }

    #[test]
    fn persistent_institutions_share_everywhere() {
        let p = ModelParams::new(0.5, 0.1, 0.5).unwrap();
        let rows = sweep_delta(&p, &interior_grid(1001)).unwrap();
        assert!(rows.iter().all(|r| r.h > 0.0 && r.grants_access));
        assert!(rows.windows(2).all(|w| w[1].h > w[0].h));
    }

    #[test]
    fn single_point_and_empty_grids() {
        let p = ModelParams::proportional(0.5, 0.1).unwrap();
        assert_eq!(interior_grid(1), vec![0.5]);
        assert_eq!(sweep_delta(&p, &[0.5]).unwrap().len(), 1);
        assert!(matches!(sweep_delta(&p, &[]), Err(Error::EmptyGrid)));
        assert!(sweep_delta(&p, &[0.0]).is_err());
    }

    #[test]
    fn csv_layout() {
        let p = ModelParams::proportional(0.5, 0.1).unwrap();
        let rows = sweep_delta(&p, &[0.3]).unwrap();
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), SWEEP_HEADER);
        assert_eq!(lines.next().unwrap(), "0.3,0.116883117,0.116883117,0.727272727,1,0.883116883,true");
    }

    #[test]
    fn phase_grid_is_gamma_major() {
        let p = ModelParams::proportional(0.5, 0.1).unwrap();
        let cells = phase_grid(&p, &[0.2, 0.95], &[0.5, 1.0]).unwrap();
        assert_eq!(cells.len(), 4);
        assert_eq!((cells[1].gamma, cells[1].delta), (0.5, 0.95));
        assert!(cells[1].grants_access);
        assert!(!cells[3].grants_access);
    }
}
