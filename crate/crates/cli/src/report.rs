//! Text report of a single solve.

use std::fmt::Write as _;

use ambc_v2x::rates::{end_to_end_rates, energy_efficiency, icsi_interference, total_power};
use ambc_v2x::units::watt_to_dbm;
use ambc_v2x::{ChannelRealization, NetworkConfig, SolveOutcome, Status};

/// Allocation, slacks, power, energy efficiency and status of `outcome`.
///
/// `beta*_{i,m}` is the share of RSU `m`'s power given to its vehicle `i`.
pub fn print_solution(
    outcome: &SolveOutcome,
    ch: &ChannelRealization,
    config: &NetworkConfig,
) -> String {
    let sol = &outcome.solution;
    let mut s = String::new();
    let status = match outcome.status {
        Status::Converged => "converged".to_string(),
        Status::MaxIterations => "MAX_ITERATIONS".to_string(),
        Status::Infeasible => "INFEASIBLE".to_string(),
    };
    let _ = writeln!(
        s,
        "status: {status} after {} iterations",
        outcome.iterations_used
    );
    if outcome.status != Status::Converged {
        if let Some(w) = outcome.constraint_slacks.worst() {
            let _ = writeln!(s, "worst slack: {} = {:.6e}", w.name, w.value);
        }
    }

    s.push_str("\nallocation\n");
    for k in 0..2 {
        let _ = writeln!(s, "  alpha*_{}   = {:.9e}", k + 1, sol.alpha[k]);
    }
    for m in 0..2 {
        for i in 0..2 {
            let _ = writeln!(s, "  beta*_{},{}  = {:.9e}", i + 1, m + 1, sol.beta[m][i]);
        }
    }
    for m in 0..2 {
        let _ = writeln!(s, "  xi*_{}      = {:.9e}", m + 1, sol.xi[m]);
    }

    s.push_str("\nconstraint slacks (>= 0 is satisfied)\n");
    for sl in &outcome.constraint_slacks.entries {
        let _ = writeln!(s, "  {:<16} {:>+14.6e}", sl.name, sl.value);
    }

    let power = total_power(sol);
    let rates = end_to_end_rates(ch, sol);
    s.push('\n');
    let _ = writeln!(s, "BS power          {:.6e} W", sol.p_bs_w);
    let _ = writeln!(
        s,
        "RSU powers        {:.6e} W, {:.6e} W",
        sol.q_rsu_w[0], sol.q_rsu_w[1]
    );
    let _ = writeln!(
        s,
        "total power       {:.6e} W ({:.3} dBm)",
        power,
        watt_to_dbm(power)
    );
    let _ = writeln!(s, "sum rate          {:.6} bps/Hz", rates.sum_rate);
    let _ = writeln!(s, "iCSI interference {:.6e} W", icsi_interference(ch, sol));
    match energy_efficiency(&rates, sol, config) {
        Ok(ee) if outcome.converged => {
            let _ = writeln!(s, "energy efficiency {ee:.6} Mb/J");
        }
        _ => s.push_str("energy efficiency n/a\n"),
    }
    s
}
