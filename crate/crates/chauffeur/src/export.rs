//! CSV writers for curves, trajectories and advantage maps.

use std::io::{self, Write};

use crate::deception::AdvantageMap;
use crate::sim::Trajectory;
use crate::solution::{CharacteristicField, Geometry, SampledCurve};

pub const CURVE_HEADER: &str = "family,branch_id,tau,x,y";
pub const TRAJECTORY_HEADER: &str = "t,x,y,u,psi,mu_cmd,mu_hat,region,event";
pub const ADVANTAGE_HEADER: &str =
    "x0,y0,region_mu1,region_mu2,t_truthful,t_deceptive,gain,switch_x,switch_y";

/// Formats with 9 significant digits, in the shortest of fixed or
/// scientific notation, trailing zeros trimmed.
pub fn sig9(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return if v.is_nan() {
            "nan".into()
        } else if v > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let sci = format!("{:.8e}", v);
    let (mant, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, v))
    } else {
        format!("{}e{}", trim_zeros(mant.to_string()), exp)
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(sig9).unwrap_or_default()
}

fn write_curve<W: Write>(w: &mut W, c: &SampledCurve, branch: usize) -> io::Result<()> {
    for (p, t) in c.points.iter().zip(&c.tau) {
        writeln!(
            w,
            "{},{},{},{},{}",
            c.kind.as_str(),
            branch,
            sig9(*t),
            sig9(p.x),
            sig9(p.y)
        )?;
    }
    Ok(())
}

/// Writes every `stride`-th sample of each characteristic, plus its last.
pub fn write_field<W: Write>(w: &mut W, f: &CharacteristicField, stride: usize) -> io::Result<()> {
    let stride = stride.max(1);
    for (i, c) in f.trajectories.iter().enumerate() {
        let n = c.points.len();
        for (k, p) in c.points.iter().enumerate() {
            if k % stride == 0 || k + 1 == n {
                let tau = c.value0 + k as f64 * f.d_tau;
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    f.family.as_str(),
                    i,
                    sig9(tau),
                    sig9(p.x),
                    sig9(p.y)
                )?;
            }
        }
    }
    Ok(())
}

/// Barrier, equivocal curve and the primary and secondary fans. The `tau`
/// column carries time-to-go.
pub fn write_geometry<W: Write>(w: &mut W, g: &Geometry, stride: usize) -> io::Result<()> {
    writeln!(w, "{CURVE_HEADER}")?;
    write_curve(w, &g.barrier, 0)?;
    write_curve(w, &g.equivocal.curve, 0)?;
    write_field(w, &g.primary, stride)?;
    write_field(w, &g.secondary, stride)?;
    Ok(())
}

pub fn write_trajectory<W: Write>(w: &mut W, tr: &Trajectory) -> io::Result<()> {
    writeln!(w, "{TRAJECTORY_HEADER}")?;
    let mut events = tr.events.iter().peekable();
    let mut last = None;
    for s in &tr.samples {
        while let Some(e) = events.next_if(|e| e.t < s.t) {
            write_event(w, e, last)?;
        }
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},",
            sig9(s.t),
            sig9(s.state.x),
            sig9(s.state.y),
            sig9(s.controls.u),
            sig9(s.controls.psi),
            sig9(s.controls.mu_cmd),
            sig9(s.mu_hat),
            s.region.tag
        )?;
        last = Some(s);
    }
    for e in events {
        write_event(w, e, last)?;
    }
    Ok(())
}

fn write_event<W: Write>(
    w: &mut W,
    e: &crate::sim::Event,
    last: Option<&crate::sim::Sample>,
) -> io::Result<()> {
    let (u, psi, mu, mu_hat, region) = match last {
        Some(s) => (
            sig9(s.controls.u),
            sig9(s.controls.psi),
            sig9(s.controls.mu_cmd),
            sig9(s.mu_hat),
            s.region.tag.to_string(),
        ),
        None => Default::default(),
    };
    writeln!(
        w,
        "{},{},{},{},{},{},{},{},{}",
        sig9(e.t),
        sig9(e.location.x),
        sig9(e.location.y),
        u,
        psi,
        mu,
        mu_hat,
        region,
        e.kind.as_str()
    )
}

pub fn write_advantage_map<W: Write>(w: &mut W, m: &AdvantageMap) -> io::Result<()> {
    writeln!(w, "{ADVANTAGE_HEADER}")?;
    for c in &m.cells {
        match &c.report {
            Ok(r) => writeln!(
                w,
                "{},{},{},{},{},{},{},{},{}",
                sig9(c.point.x),
                sig9(c.point.y),
                r.region_mu1.tag,
                r.region_mu2.tag,
                opt(r.t_truthful),
                opt(r.t_deceptive),
                opt(r.gain),
                opt(r.switch_point.map(|p| p.x)),
                opt(r.switch_point.map(|p| p.y)),
            )?,
            Err(_) => writeln!(w, "{},{},,,,,,,", sig9(c.point.x), sig9(c.point.y))?,
        }
    }
    Ok(())
}
