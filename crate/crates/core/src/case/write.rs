use std::fmt::Write as _;

use super::NetworkCase;

/// Find a source value `v` whose parsed image `f(v)` is exactly `target`,
/// searching a few ulps around `guess`.
fn preimage(target: f64, guess: f64, f: impl Fn(f64) -> f64) -> f64 {
    if !target.is_finite() || f(guess) == target {
        return guess;
    }
    let (mut up, mut down) = (guess, guess);
    for _ in 0..64 {
        up = up.next_up();
        if f(up) == target {
            return up;
        }
        down = down.next_down();
        if f(down) == target {
            return down;
        }
    }
    guess
}

/// Serialize a case to canonical MATPOWER text that [`super::parse_case`]
/// reads back to an identical [`NetworkCase`].
pub fn write_case(case: &NetworkCase) -> String {
    let base = case.base_mva;
    let mw = |pu: f64| preimage(pu, pu * base, |v| v / base);
    let mut s = String::new();
    let _ = writeln!(s, "function mpc = {}", case.name);
    let _ = writeln!(s, "mpc.version = '2';");
    let _ = writeln!(s, "mpc.baseMVA = {base};");
    let _ = writeln!(s, "\n%% bus data\n%\tbus_i\ttype\tPd\tQd\tGs\tBs\tarea\tVm\tVa\tbaseKV\tzone\tVmax\tVmin");
    let _ = writeln!(s, "mpc.bus = [");
    for b in &case.buses {
        let ty = if b.is_ref { 3 } else { 1 };
        let _ = writeln!(
            s,
            "\t{}\t{ty}\t{}\t0\t0\t0\t1\t1\t0\t0\t1\t1.1\t0.9;",
            b.id,
            mw(b.demand)
        );
    }
    let _ = writeln!(s, "];");
    let _ = writeln!(s, "\n%% generator data\n%\tbus\tPg\tQg\tQmax\tQmin\tVg\tmBase\tstatus\tPmax\tPmin");
    let _ = writeln!(s, "mpc.gen = [");
    for g in &case.generators {
        let _ = writeln!(
            s,
            "\t{}\t0\t0\t0\t0\t1\t{base}\t1\t{}\t{};",
            g.bus,
            mw(g.p_max),
            mw(g.p_min)
        );
    }
    let _ = writeln!(s, "];");
    let _ = writeln!(s, "\n%% branch data\n%\tfbus\ttbus\tr\tx\tb\trateA\trateB\trateC\tratio\tangle\tstatus");
    let _ = writeln!(s, "mpc.branch = [");
    for br in &case.branches {
        let x = preimage(br.susceptance, 1.0 / br.susceptance, |v| 1.0 / v);
        let rate = if br.flow_limit.is_finite() {
            mw(br.flow_limit)
        } else {
            0.0
        };
        let _ = writeln!(
            s,
            "\t{}\t{}\t0\t{x}\t0\t{rate}\t{rate}\t{rate}\t0\t0\t{};",
            br.from,
            br.to,
            u8::from(br.in_service)
        );
    }
    let _ = writeln!(s, "];");
    let _ = writeln!(s, "\n%% generator cost data\n%\t2\tstartup\tshutdown\tn\tc(n-1)\t...\tc0");
    let _ = writeln!(s, "mpc.gencost = [");
    for g in &case.generators {
        let c = g.cost;
        let c2 = preimage(c.c2, c.c2 / base / base, |v| v * base * base);
        let c1 = preimage(c.c1, c.c1 / base, |v| v * base);
        let _ = writeln!(s, "\t2\t0\t0\t3\t{c2}\t{c1}\t{};", c.c0);
    }
    let _ = writeln!(s, "];");
    s
}
