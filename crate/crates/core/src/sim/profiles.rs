//! Generators for the three test-protocol current profiles: staircase
//! characterization pulses, constant-current discharge, and scaled driving
//! cycles built from piecewise-constant shapes.

use std::collections::BTreeMap;

use crate::profile::{CurrentProfile, ProfileSample};
use crate::{Error, Result};

/// Pulse characterization: for each C-rate, a rest / discharge / rest /
/// charge block sequence at fixed step length. Currents are rate times
/// capacity; an empty rate list yields an empty (zero-duration) profile.
pub fn generate_dynamic_profile(
    rates: &[f64],
    step_s: f64,
    rest_s: f64,
    capacity_ah: f64,
) -> Result<CurrentProfile> {
    if !(step_s > 0.0) || !(rest_s > 0.0) {
        return Err(Error::Config(format!(
            "step and rest durations must be positive (step {step_s}, rest {rest_s})"
        )));
    }
    if !(capacity_ah > 0.0) {
        return Err(Error::Config(format!(
            "capacity must be positive, got {capacity_ah}"
        )));
    }
    for &r in rates {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::Config(format!("rates must be positive, got {r}")));
        }
    }
    let mut samples = Vec::new();
    let mut t = 0.0;
    for &rate in rates {
        let current = rate * capacity_ah;
        for (dur, i) in [
            (rest_s, 0.0),
            (step_s, -current),
            (rest_s, 0.0),
            (step_s, current),
        ] {
            samples.push(ProfileSample {
                time_s: t,
                current_a: i,
            });
            t += dur;
        }
    }
    // End marker; for no rates at all this is the whole profile.
    samples.push(ProfileSample {
        time_s: t,
        current_a: 0.0,
    });
    CurrentProfile::new(samples, None)
}

/// Constant-current discharge at a C-rate. The time horizon is 1.5 times
/// the nominal full-discharge time; the simulator's voltage cutoff is
/// expected to end the run before that.
pub fn generate_discharge_profile(rate: f64, capacity_ah: f64) -> Result<CurrentProfile> {
    if !(rate > 0.0) || !rate.is_finite() {
        return Err(Error::Config(format!(
            "discharge rate must be positive, got {rate}"
        )));
    }
    if !(capacity_ah > 0.0) {
        return Err(Error::Config(format!(
            "capacity must be positive, got {capacity_ah}"
        )));
    }
    let current = rate * capacity_ah;
    let duration = 1.5 * 3600.0 / rate;
    CurrentProfile::new(
        vec![
            ProfileSample {
                time_s: 0.0,
                current_a: -current,
            },
            ProfileSample {
                time_s: duration,
                current_a: 0.0,
            },
        ],
        None,
    )
}

/// Named piecewise-constant current shapes in C-rate units, parsed from a
/// plain-text file so the bundled set can be edited.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeSet {
    shapes: BTreeMap<String, Vec<(f64, f64)>>,
}

impl ShapeSet {
    /// Format: `shape NAME` opens a shape; following lines hold
    /// `duration_s c_rate` pairs. `#` comments and blank lines are ignored.
    pub fn parse(text: &str) -> Result<ShapeSet> {
        let mut shapes: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
        let mut current: Option<String> = None;
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let lineno = idx + 1;
            if let Some(name) = line.strip_prefix("shape ") {
                let name = name.trim();
                if name.is_empty() {
                    return Err(Error::parse(lineno, "shape needs a name"));
                }
                if shapes.contains_key(name) {
                    return Err(Error::parse(
                        lineno,
                        format!("duplicate shape {name}"),
                    ));
                }
                shapes.insert(name.to_string(), Vec::new());
                current = Some(name.to_string());
                continue;
            }
            let name = current.clone().ok_or_else(|| {
                Error::parse(lineno, "segment before any `shape` header")
            })?;
            let mut parts = line.split_whitespace();
            let dur: f64 = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::parse(lineno, "expected `duration_s c_rate`"))?;
            let rate: f64 = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| Error::parse(lineno, "expected `duration_s c_rate`"))?;
            if parts.next().is_some() {
                return Err(Error::parse(lineno, "expected exactly two numbers"));
            }
            if !(dur > 0.0) || !dur.is_finite() || !rate.is_finite() {
                return Err(Error::parse(
                    lineno,
                    format!("bad segment ({dur}, {rate})"),
                ));
            }
            shapes.get_mut(&name).unwrap().push((dur, rate));
        }
        for (name, segs) in &shapes {
            if segs.is_empty() {
                return Err(Error::Validation(format!("shape {name} has no segments")));
            }
        }
        Ok(ShapeSet { shapes })
    }

    pub fn get(&self, name: &str) -> Option<&[(f64, f64)]> {
        self.shapes.get(name).map(|v| v.as_slice())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.shapes.keys().map(|s| s.as_str())
    }
}

/// One element of a driving schedule.
#[derive(Debug, Clone, PartialEq)]
pub enum DrivingBlock {
    /// Play a named shape once.
    Shape { name: String },
    /// Play a named shape until coulomb counting crosses the target state
    /// of charge; stops within one repetition of the crossing.
    RepeatUntilSoc { name: String, target_soc: f64 },
    /// Zero current.
    Rest { duration_s: f64 },
}

/// Schedule syntax: statements separated by `;` or newlines.
/// `run A` (or bare `A`), `repeat A until soc 0.5`, `rest 300`.
pub fn parse_driving_blocks(text: &str) -> Result<Vec<DrivingBlock>> {
    let mut blocks = Vec::new();
    for stmt in text.split([';', '\n']) {
        let stmt = stmt.trim();
        if stmt.is_empty() || stmt.starts_with('#') {
            continue;
        }
        let words: Vec<&str> = stmt.split_whitespace().collect();
        match words.as_slice() {
            ["rest", dur] => {
                let duration_s: f64 = dur.parse().map_err(|_| {
                    Error::Config(format!("bad rest duration in `{stmt}`"))
                })?;
                if !(duration_s > 0.0) {
                    return Err(Error::Config(format!(
                        "rest duration must be positive in `{stmt}`"
                    )));
                }
                blocks.push(DrivingBlock::Rest { duration_s });
            }
            ["repeat", name, "until", "soc", target] => {
                let target_soc: f64 = target.parse().map_err(|_| {
                    Error::Config(format!("bad soc target in `{stmt}`"))
                })?;
                if !(0.0..=1.0).contains(&target_soc) {
                    return Err(Error::Config(format!(
                        "soc target must be in [0, 1] in `{stmt}`"
                    )));
                }
                blocks.push(DrivingBlock::RepeatUntilSoc {
                    name: name.to_string(),
                    target_soc,
                });
            }
            ["run", name] | [name] => {
                blocks.push(DrivingBlock::Shape {
                    name: name.to_string(),
                });
            }
            _ => {
                return Err(Error::Config(format!(
                    "cannot parse schedule statement `{stmt}`"
                )));
            }
        }
    }
    Ok(blocks)
}

/// Repetition cap for soc-targeted blocks; past this the target is treated
/// as unreachable.
pub const MAX_REPETITIONS: usize = 10_000;

/// Assemble a driving profile. Currents are `c_rate · n_fraction ·
/// capacity`; state of charge is tracked by coulomb counting from
/// `initial_soc` to resolve the repeat-until targets.
pub fn generate_driving_profile(
    blocks: &[DrivingBlock],
    shapes: &ShapeSet,
    n_fraction: f64,
    capacity_ah: f64,
    initial_soc: f64,
) -> Result<CurrentProfile> {
    if !(n_fraction > 0.0) || !n_fraction.is_finite() {
        return Err(Error::Config(format!(
            "capacity fraction must be positive, got {n_fraction}"
        )));
    }
    if !(capacity_ah > 0.0) {
        return Err(Error::Config(format!(
            "capacity must be positive, got {capacity_ah}"
        )));
    }
    if !(0.0..=1.0).contains(&initial_soc) {
        return Err(Error::Config(format!(
            "initial state of charge must be in [0, 1], got {initial_soc}"
        )));
    }

    let mut samples: Vec<ProfileSample> = Vec::new();
    let mut t = 0.0;
    let mut soc = initial_soc;
    let coulombs_full = 3600.0 * capacity_ah;

    let play = |samples: &mut Vec<ProfileSample>,
                    t: &mut f64,
                    soc: &mut f64,
                    segs: &[(f64, f64)]| {
        for &(dur, rate) in segs {
            let current = rate * n_fraction * capacity_ah;
            samples.push(ProfileSample {
                time_s: *t,
                current_a: current,
            });
            *t += dur;
            *soc += current * dur / coulombs_full;
        }
    };

    for block in blocks {
        match block {
            DrivingBlock::Rest { duration_s } => {
                samples.push(ProfileSample {
                    time_s: t,
                    current_a: 0.0,
                });
                t += duration_s;
            }
            DrivingBlock::Shape { name } => {
                let segs = shapes.get(name).ok_or_else(|| {
                    Error::Config(format!("unknown shape {name}"))
                })?;
                play(&mut samples, &mut t, &mut soc, segs);
            }
            DrivingBlock::RepeatUntilSoc { name, target_soc } => {
                let segs = shapes.get(name).ok_or_else(|| {
                    Error::Config(format!("unknown shape {name}"))
                })?;
                // Which side of the target counts as reached depends on the
                // shape's net charge movement.
                let net: f64 = segs
                    .iter()
                    .map(|&(dur, rate)| rate * n_fraction * capacity_ah * dur)
                    .sum::<f64>()
                    / coulombs_full;
                let mut reps = 0;
                loop {
                    let reached = if net < 0.0 {
                        soc <= *target_soc
                    } else if net > 0.0 {
                        soc >= *target_soc
                    } else {
                        (soc - target_soc).abs() < 1e-12
                    };
                    if reached {
                        break;
                    }
                    if reps >= MAX_REPETITIONS {
                        return Err(Error::Validation(format!(
                            "soc target {target_soc} not reached after \
                             {MAX_REPETITIONS} repetitions of {name}"
                        )));
                    }
                    play(&mut samples, &mut t, &mut soc, segs);
                    reps += 1;
                }
            }
        }
    }
    samples.push(ProfileSample {
        time_s: t,
        current_a: 0.0,
    });
    CurrentProfile::new(samples, None)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dynamic_profile_matches_the_block_layout() {
        let p =
            generate_dynamic_profile(&[0.1, 0.2, 0.5, 1.0], 300.0, 300.0, 55.0)
                .unwrap();
        assert_eq!(p.duration_s(), 4.0 * 4.0 * 300.0);
        // First block: rest, discharge at C/10, rest, charge.
        assert_eq!(p.current_at(100.0), 0.0);
        assert_eq!(p.current_at(300.0), -5.5);
        assert_eq!(p.current_at(700.0), 0.0);
        assert_eq!(p.current_at(1000.0), 5.5);
        // Later blocks scale with their rate.
        assert_eq!(p.current_at(1500.0), -11.0);
        assert_eq!(p.current_at(4000.0), 55.0);
        assert_eq!(p.samples().last().unwrap().current_a, 0.0);
    }

    #[test]
    fn truncated_rate_list_shortens_the_profile() {
        let p = generate_dynamic_profile(&[0.1, 0.2, 0.5], 300.0, 300.0, 55.0)
            .unwrap();
        assert_eq!(p.duration_s(), 3.0 * 4.0 * 300.0);
    }

    #[test]
    fn empty_rates_give_an_empty_profile() {
        let p = generate_dynamic_profile(&[], 300.0, 300.0, 55.0).unwrap();
        assert_eq!(p.duration_s(), 0.0);
        assert_eq!(p.samples().len(), 1);
        assert_eq!(p.current_at(0.0), 0.0);
    }

    #[test]
    fn discharge_profile_is_constant_with_headroom() {
        let p = generate_discharge_profile(0.1, 55.0).unwrap();
        assert_eq!(p.current_at(0.0), -5.5);
        assert_eq!(p.current_at(30_000.0), -5.5);
        // 1.5x the nominal 10-hour discharge.
        assert_eq!(p.duration_s(), 54_000.0);
        assert!(generate_discharge_profile(0.0, 55.0).is_err());
        assert!(generate_discharge_profile(-1.0, 55.0).is_err());
    }

    const SHAPES: &str = "\
# two-segment test shapes
shape A
  600 -0.6
  300 0.3
shape B
  100 -1.0
";

    #[test]
    fn shape_file_round_trip() {
        let set = ShapeSet::parse(SHAPES).unwrap();
        assert_eq!(set.names().collect::<Vec<_>>(), vec!["A", "B"]);
        assert_eq!(set.get("A").unwrap(), &[(600.0, -0.6), (300.0, 0.3)]);
        assert!(set.get("C").is_none());
    }

    #[test]
    fn shape_file_rejects_garbage() {
        assert!(ShapeSet::parse("600 -0.6\n").is_err()); // segment before header
        assert!(ShapeSet::parse("shape A\nshape A\n1 0").is_err()); // duplicate
        assert!(ShapeSet::parse("shape A\n-5 0.1\n").is_err()); // bad duration
        assert!(ShapeSet::parse("shape A\n").is_err()); // no segments
    }

    #[test]
    fn schedule_parsing() {
        let blocks =
            parse_driving_blocks("repeat A until soc 0.5; rest 300; run B; A")
                .unwrap();
        assert_eq!(
            blocks,
            vec![
                DrivingBlock::RepeatUntilSoc {
                    name: "A".into(),
                    target_soc: 0.5
                },
                DrivingBlock::Rest { duration_s: 300.0 },
                DrivingBlock::Shape { name: "B".into() },
                DrivingBlock::Shape { name: "A".into() },
            ]
        );
        assert!(parse_driving_blocks("repeat A until soc 1.5").is_err());
        assert!(parse_driving_blocks("dance A").is_err());
    }

    #[test]
    fn capacity_fraction_scales_currents_linearly() {
        let set = ShapeSet::parse(SHAPES).unwrap();
        let blocks = vec![DrivingBlock::Shape { name: "A".into() }];
        let full = generate_driving_profile(&blocks, &set, 1.0, 55.0, 0.8).unwrap();
        let half = generate_driving_profile(&blocks, &set, 0.5, 55.0, 0.8).unwrap();
        let third =
            generate_driving_profile(&blocks, &set, 1.0 / 3.0, 55.0, 0.8).unwrap();
        for (f, h) in full.samples().iter().zip(half.samples()) {
            assert_eq!(f.time_s, h.time_s);
            assert_eq!(f.current_a, 2.0 * h.current_a);
        }
        for (f, t) in full.samples().iter().zip(third.samples()) {
            if f.current_a != 0.0 {
                assert!((f.current_a / t.current_a - 3.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn repeat_until_soc_stops_within_one_repetition() {
        // Net discharge of 0.1 soc per hour-long repetition.
        let set = ShapeSet::parse("shape D\n3600 -0.1\n").unwrap();
        let blocks = vec![DrivingBlock::RepeatUntilSoc {
            name: "D".into(),
            target_soc: 0.75,
        }];
        let p = generate_driving_profile(&blocks, &set, 1.0, 55.0, 1.0).unwrap();
        // 1.0 -> 0.9 -> 0.8 -> 0.7: three repetitions, first crossing kept.
        assert!((p.duration_s() - 3.0 * 3600.0).abs() < 1e-9);
    }

    #[test]
    fn already_past_target_plays_nothing() {
        let set = ShapeSet::parse("shape D\n3600 -0.1\n").unwrap();
        let blocks = vec![DrivingBlock::RepeatUntilSoc {
            name: "D".into(),
            target_soc: 0.9,
        }];
        let p = generate_driving_profile(&blocks, &set, 1.0, 55.0, 0.5).unwrap();
        assert_eq!(p.duration_s(), 0.0);
    }

    #[test]
    fn unreachable_soc_target_errors_at_the_cap() {
        // Net-zero shape can never reach the target.
        let set = ShapeSet::parse("shape Z\n10 0.1\n10 -0.1\n").unwrap();
        let blocks = vec![DrivingBlock::RepeatUntilSoc {
            name: "Z".into(),
            target_soc: 0.2,
        }];
        let err = generate_driving_profile(&blocks, &set, 1.0, 55.0, 0.8)
            .unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
    }

    #[test]
    fn rest_only_schedule_is_all_zero() {
        let set = ShapeSet::parse(SHAPES).unwrap();
        let blocks = parse_driving_blocks("rest 300; rest 600").unwrap();
        let p = generate_driving_profile(&blocks, &set, 1.0, 55.0, 0.5).unwrap();
        assert_eq!(p.duration_s(), 900.0);
        assert!(p.samples().iter().all(|s| s.current_a == 0.0));
    }
}
