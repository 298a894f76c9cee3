use std::io::Write;

use crate::error::Result;

use super::Trajectory;

pub const TRAJECTORY_HEADER: &str = "t,F,P,v,f1,f2,f3,f4";

/// C-style `%.{digits}g` formatting. Negative zero is written as `0`.
pub fn format_g(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let digits = digits.max(1);
    // rounding to `digits` significant figures decides the exponent
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let mantissa = trim_fraction(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_fraction(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_fraction(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// `t,F,P,v,f1,f2,f3,f4`, one row per recorded point; absent controls are 0.
pub fn write_trajectory_csv<W: Write>(traj: &Trajectory, mut out: W) -> Result<()> {
    writeln!(out, "{TRAJECTORY_HEADER}")?;
    let controls: Vec<Vec<f64>> = (1..=4).map(|label| traj.control(label)).collect();
    for i in 0..traj.len() {
        let mut row = vec![traj.times[i], traj.fidelity[i], traj.purity[i], traj.speed[i]];
        row.extend(controls.iter().map(|c| c[i]));
        let cells: Vec<String> = row.iter().map(|&x| format_g(x, 12)).collect();
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}
