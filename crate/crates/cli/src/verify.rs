//! Solver-versus-reference checks behind the `verify` command.
//!
//! Stage 1 is compared with the exhaustive grid over `(alpha_1, alpha_2)`.
//! Stage 2 is compared cell by cell with the grid over
//! `(beta_1, beta_2, xi)`, with the other RSU's interference frozen at the
//! solver's converged value. A grid optimum may overshoot the continuous one
//! by up to two grid steps of power, which sets the allowance.

use std::fmt::Write as _;

use ambc_v2x::oracle::{grid_search_p1, grid_search_p2, GridSpec};
use ambc_v2x::simulation::realization_seed;
use ambc_v2x::solver::{solve_p1, solve_p2};
use ambc_v2x::{ChannelRealization, Mode, NetworkConfig, SolverSettings, Status};

pub const P1_REL_TOL: f64 = 0.02;
pub const P2_REL_TOL: f64 = 0.03;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifySpec {
    pub seeds: u64,
    pub p1_resolution: f64,
    pub p2_resolution: f64,
}

impl Default for VerifySpec {
    fn default() -> Self {
        Self {
            seeds: 20,
            p1_resolution: GridSpec::P1_DEFAULT.resolution,
            p2_resolution: GridSpec::P2_DEFAULT.resolution,
        }
    }
}

/// One compared quantity.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub seed: u64,
    /// `"p1"` or `"p2 rsu <m>"`.
    pub what: String,
    pub solver: Status,
    /// Solver power, watts; `None` unless the solver converged.
    pub solver_w: Option<f64>,
    /// Grid optimum, watts; `None` when the grid has no feasible point.
    pub grid_w: Option<f64>,
    pub allowance_w: f64,
    pub ok: bool,
}

impl Check {
    /// `|solver - grid| / allowance`, when both exist.
    pub fn error_ratio(&self) -> Option<f64> {
        Some((self.solver_w? - self.grid_w?).abs() / self.allowance_w)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerifySummary {
    pub p1: Vec<Check>,
    pub p2: Vec<Check>,
}

impl VerifySummary {
    pub fn p1_passed(&self) -> bool {
        self.p1.iter().all(|c| c.ok)
    }

    pub fn p2_passed(&self) -> bool {
        self.p2.iter().all(|c| c.ok)
    }

    pub fn passed(&self) -> bool {
        self.p1_passed() && self.p2_passed()
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:>6} {:<9} {:<15} {:>13} {:>13} {:>10}  result",
            "seed", "check", "solver", "solver (W)", "grid (W)", "err/allow"
        );
        let fmt = |x: Option<f64>| x.map_or("-".to_string(), |v| format!("{v:.6e}"));
        for c in self.p1.iter().chain(&self.p2) {
            let _ = writeln!(
                s,
                "{:>6} {:<9} {:<15} {:>13} {:>13} {:>10}  {}",
                c.seed,
                c.what,
                c.solver.name(),
                fmt(c.solver_w),
                fmt(c.grid_w),
                c.error_ratio()
                    .map_or("-".to_string(), |r| format!("{r:.3}")),
                if c.ok { "ok" } else { "MISMATCH" }
            );
        }
        let count = |v: &[Check]| v.iter().filter(|c| c.ok).count();
        let _ = writeln!(
            s,
            "stage 1: {}/{} agree; stage 2: {}/{} agree",
            count(&self.p1),
            self.p1.len(),
            count(&self.p2),
            self.p2.len()
        );
        s
    }
}

/// Runs the comparison on realizations `0..spec.seeds` of the master seed.
///
/// Stage 1 must agree on feasibility and, when feasible, on power within
/// `max(2%, 2 res P_max)`. Each stage-2 cell with a converged solver power
/// must have a grid optimum within `max(3%, 2 res Q_m)`; cells the solver
/// does not converge on carry no power to compare and are listed only.
pub fn run_verify(config: &NetworkConfig, spec: &VerifySpec) -> VerifySummary {
    let settings = SolverSettings::from_config(config).with_mode(Mode::Ambc);
    let p = config.p_max_w();
    let mut summary = VerifySummary::default();
    for seed in 0..spec.seeds {
        let ch = match ChannelRealization::from_seed(config, realization_seed(config.seed, seed)) {
            Ok(ch) => ch,
            Err(_) => continue,
        };
        let first = solve_p1(&ch, config, &settings);
        let grid = grid_search_p1(
            &ch,
            config,
            GridSpec {
                resolution: spec.p1_resolution,
            },
        );
        let solver_w = first.converged.then(|| first.solution.bs_radiated_w());
        let grid_w = grid.map(|g| g.power_w);
        let allowance_w = (P1_REL_TOL * grid_w.unwrap_or(0.0)).max(2.0 * spec.p1_resolution * p);
        let ok = match (solver_w, grid_w) {
            (Some(a), Some(b)) => (a - b).abs() <= allowance_w,
            (None, None) => first.status == Status::Infeasible,
            _ => false,
        };
        summary.p1.push(Check {
            seed,
            what: "p1".into(),
            solver: first.status,
            solver_w,
            grid_w,
            allowance_w,
            ok,
        });
        if !first.converged {
            continue;
        }

        let q = first.solution.q_rsu_w;
        let second = solve_p2(&ch, config, &settings, q);
        let frozen = [
            second.solution.rsu_radiated_w(1),
            second.solution.rsu_radiated_w(0),
        ];
        let grid = grid_search_p2(
            &ch,
            config,
            GridSpec {
                resolution: spec.p2_resolution,
            },
            q,
            frozen,
            Mode::Ambc,
        );
        for m in 0..2 {
            let solver_w = second.converged.then(|| second.solution.rsu_radiated_w(m));
            let grid_w = grid[m].map(|g| g.power_w);
            let allowance_w =
                (P2_REL_TOL * grid_w.unwrap_or(0.0)).max(2.0 * spec.p2_resolution * q[m]);
            let ok = match (solver_w, grid_w) {
                (Some(a), Some(b)) => (a - b).abs() <= allowance_w,
                (Some(_), None) => false,
                (None, _) => true,
            };
            summary.p2.push(Check {
                seed,
                what: format!("p2 rsu {}", m + 1),
                solver: second.status,
                solver_w,
                grid_w,
                allowance_w,
                ok,
            });
        }
    }
    summary
}
