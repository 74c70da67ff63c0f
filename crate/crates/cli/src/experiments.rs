use serde::Serialize;
use serde_json::{json, Value};

use qrecords_core::forbidden::{
    allowed_subspace, back_propagate, evolve_span, forbidden_final_states, si_witness, SubspaceReport,
    WitnessOptions, DEFAULT_DIMENSION_BOUND, DEFAULT_RANDOM_TRIALS,
};
use qrecords_core::lattice::scenarios::{bath_configuration, bath_world, thermal_trace};
use qrecords_core::lattice::{branch_decompose, born_sample_counts, reverse_run, run, LatticeWorld, ParticleKind};
use qrecords_core::measureframe::{
    epr_parallel_probability, epr_setup, outcome_distribution, run_schedule, singlet_system, Diagnostic,
    MeasurementSetup, OutcomeDistribution,
};
use qrecords_core::qstate::{span_weight, StateVector};
use qrecords_core::records::{audit_simulation, forge_and_audit, simulate, RecordClaim};
use qrecords_core::sampling::sample_counts;

use crate::error::CliError;
use crate::scenario::{Experiment, Mode, Parameters, Scenario};

/// Largest accepted drift of `‖ψ‖` from 1.
pub const NORM_TOLERANCE: f64 = 1e-8;

pub struct Outcome {
    pub results: Value,
    pub diagnostics: Vec<Value>,
    pub events: Vec<Value>,
}

/// Effective knobs after command-line overrides.
#[derive(Clone, Debug)]
pub struct Knobs {
    pub seed: u64,
    pub samples: Option<usize>,
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report values are plain data")
}

fn check_norm(s: &StateVector, what: &str) -> Result<f64, CliError> {
    let n = s.norm();
    if (n - 1.0).abs() > NORM_TOLERANCE {
        return Err(CliError::Numerical(format!(
            "{what}: norm {n:.17e} drifted from 1 by more than {NORM_TOLERANCE:e}"
        )));
    }
    Ok(n)
}

fn state_terms(s: &StateVector) -> Value {
    Value::Array(
        s.terms()
            .map(|(l, a)| json!({"label": l.registers(), "amplitude": to_value(a)}))
            .collect(),
    )
}

fn wrong_mode(e: Experiment, needed: &str) -> CliError {
    CliError::Validation(format!("experiment `{}` needs mode {needed}", e.name()))
}

pub fn run_experiment(s: &Scenario, knobs: &Knobs) -> Result<Outcome, CliError> {
    let p = &s.parameters;
    match (s.experiment, s.mode) {
        (Experiment::Run, Mode::Abstract) => abstract_run(s),
        (Experiment::Run, Mode::Lattice) => lattice_run(s),
        (Experiment::BornStats, Mode::Abstract) => abstract_born(s, knobs),
        (Experiment::BornStats, Mode::Lattice) => lattice_born(s, knobs),
        (Experiment::ForbiddenSubspace, Mode::Abstract) => forbidden(s),
        (Experiment::SiWitness, Mode::Abstract) => witness(s, knobs),
        (Experiment::ForgeAudit, Mode::Lattice) => forge(s),
        (Experiment::ReversalDemo, Mode::Lattice) => reversal(s),
        (Experiment::ThermalDemo, Mode::Lattice) => thermal(p),
        (Experiment::Epr, Mode::Abstract) => epr(p, knobs),
        (e @ (Experiment::ForbiddenSubspace | Experiment::SiWitness | Experiment::Epr), _) => {
            Err(wrong_mode(e, "abstract"))
        }
        (e, _) => Err(wrong_mode(e, "lattice")),
    }
}

fn distribution_json(dist: &OutcomeDistribution) -> Value {
    Value::Array(
        dist.probabilities
            .iter()
            .map(|(o, p)| json!({"outcome": o, "probability": p}))
            .collect(),
    )
}

fn abstract_events(setup: &MeasurementSetup, dist: &OutcomeDistribution, diags: &[Diagnostic]) -> Vec<Value> {
    let mut events = Vec::new();
    for (q, m) in setup.schedule().iter().enumerate() {
        let disturbing = diags.iter().any(|d| match d {
            Diagnostic::DisturbingPrecondition { pointer, time, .. } => {
                *pointer == m.pointer && *time == Some(m.time)
            }
        });
        for (outcome, &prob) in &dist.probabilities {
            if prob <= 0.0 {
                continue;
            }
            events.push(json!({
                "time": m.time,
                "device": m.pointer,
                "observed": "system",
                "tag": if disturbing { "disturbing" } else { "ideal" },
                "branch": outcome,
                "value": outcome[q],
            }));
        }
    }
    events
}

fn abstract_run(s: &Scenario) -> Result<Outcome, CliError> {
    let setup = s.setup()?;
    let initial = s.initial()?.abstract_state(&setup)?;
    let out = run_schedule(&setup, &initial)?;
    let norm = check_norm(&out.state, "final state")?;
    let dist = outcome_distribution(&out.state, &setup);
    Ok(Outcome {
        results: json!({
            "final_norm": norm,
            "measurements": setup.schedule().len(),
            "outcomes": distribution_json(&dist),
        }),
        events: abstract_events(&setup, &dist, &out.diagnostics),
        diagnostics: out.diagnostics.iter().map(to_value).collect(),
    })
}

fn lattice_run(s: &Scenario) -> Result<Outcome, CliError> {
    let world = s.world()?;
    let initial = s.initial()?.lattice_state(&world)?;
    let steps = s.parameters.steps.unwrap_or(4);
    let coupling = s.parameters.coupling.unwrap_or(0.0);
    let sim = simulate(&world, &initial, steps, coupling)?;
    let norm = check_norm(sim.final_state(), "final state")?;
    let branches = branch_decompose(&world, sim.final_state())?;
    let audits = audit_simulation(&world, &sim)?;
    Ok(Outcome {
        results: json!({
            "final_norm": norm,
            "steps": steps,
            "coupling": coupling,
            "branch_count": branches.len(),
            "branches": branches.iter().map(|b| json!({"label": to_value(&b.label), "weight": b.weight})).collect::<Vec<_>>(),
            "event_count": sim.log.len(),
            "audits": to_value(&audits),
        }),
        diagnostics: sim.diagnostics.iter().map(to_value).collect(),
        events: sim.log.lines().iter().map(to_value).collect(),
    })
}

fn sample_table(labels: Vec<Value>, weights: &[f64], counts: &[usize], samples: usize) -> (Value, f64) {
    let mut worst: f64 = 0.0;
    let rows = labels
        .into_iter()
        .zip(weights.iter().zip(counts))
        .map(|(label, (&p, &n))| {
            let freq = n as f64 / samples as f64;
            let sigma = (p * (1.0 - p) / samples as f64).sqrt();
            let z = if sigma > 0.0 { (freq - p) / sigma } else { 0.0 };
            worst = worst.max(z.abs());
            json!({"outcome": label, "probability": p, "count": n, "frequency": freq, "sigma": sigma, "z": z})
        })
        .collect();
    (Value::Array(rows), worst)
}

fn samples_of(p: &Parameters, knobs: &Knobs) -> usize {
    knobs.samples.or(p.samples).unwrap_or(100_000)
}

fn abstract_born(s: &Scenario, knobs: &Knobs) -> Result<Outcome, CliError> {
    let setup = s.setup()?;
    let initial = s.initial()?.abstract_state(&setup)?;
    let out = run_schedule(&setup, &initial)?;
    check_norm(&out.state, "final state")?;
    let dist = outcome_distribution(&out.state, &setup);
    let samples = samples_of(&s.parameters, knobs);
    let weights = dist.weights();
    let counts = sample_counts(&weights, knobs.seed, samples)?;
    let labels = dist.outcomes().iter().map(to_value).collect();
    let (table, worst) = sample_table(labels, &weights, &counts, samples);
    Ok(Outcome {
        results: json!({"samples": samples, "max_abs_z": worst, "outcomes": table}),
        diagnostics: out.diagnostics.iter().map(to_value).collect(),
        events: Vec::new(),
    })
}

fn lattice_born(s: &Scenario, knobs: &Knobs) -> Result<Outcome, CliError> {
    let world = s.world()?;
    let initial = s.initial()?.lattice_state(&world)?;
    let steps = s.parameters.steps.unwrap_or(4);
    let state = run(&world, &initial, steps)?;
    check_norm(&state, "final state")?;
    let branches = branch_decompose(&world, &state)?;
    let samples = samples_of(&s.parameters, knobs);
    let counts = born_sample_counts(&branches, knobs.seed, samples)?;
    let weights: Vec<f64> = branches.iter().map(|b| b.weight).collect();
    let labels = branches.iter().map(|b| to_value(&b.label)).collect();
    let (table, worst) = sample_table(labels, &weights, &counts, samples);
    Ok(Outcome {
        results: json!({"samples": samples, "steps": steps, "max_abs_z": worst, "branches": table}),
        diagnostics: Vec::new(),
        events: Vec::new(),
    })
}

fn subspace(s: &Scenario) -> Result<(MeasurementSetup, Vec<StateVector>, SubspaceReport), CliError> {
    let setup = s.setup()?;
    let bound = s.parameters.dimension_bound.unwrap_or(DEFAULT_DIMENSION_BOUND);
    let finals = forbidden_final_states(&setup, &[])?;
    let initials = back_propagate(&setup, &finals)?;
    let report = allowed_subspace(&setup, &initials, bound)?;
    Ok((setup, finals, report))
}

fn forbidden(s: &Scenario) -> Result<Outcome, CliError> {
    let (setup, finals, report) = subspace(s)?;
    let len = setup.schedule().len();
    let ranks = (0..=len)
        .map(|t| evolve_span(&setup, &report.forbidden_basis, 0..t).map(|b| b.len()))
        .collect::<Result<Vec<_>, _>>()?;
    let invariant = ranks.iter().all(|&r| r == report.forbidden_dim);
    Ok(Outcome {
        results: json!({
            "total_dim": report.total_dim as u64,
            "forbidden_final_states": finals.len(),
            "forbidden_dim": report.forbidden_dim,
            "allowed_dim": report.allowed_dim as u64,
            "rank_by_time": ranks,
            "time_invariant": invariant,
        }),
        diagnostics: Vec::new(),
        events: Vec::new(),
    })
}

fn witness(s: &Scenario, knobs: &Knobs) -> Result<Outcome, CliError> {
    let (_, _, report) = subspace(s)?;
    let group = s.parameters.group.clone().unwrap_or_else(|| vec![0]);
    let opts = WitnessOptions {
        random_trials: s.parameters.random_trials.unwrap_or(DEFAULT_RANDOM_TRIALS),
        seed: knobs.seed,
    };
    let results = match si_witness(&report, &group, &opts)? {
        None => json!({"found": false, "forbidden_dim": report.forbidden_dim, "group": group}),
        Some(w) => {
            let product = w.product_state(&report.layout)?;
            let again = span_weight(&report.forbidden_basis, &product)?;
            json!({
                "found": true,
                "forbidden_dim": report.forbidden_dim,
                "group": group,
                "forbidden_overlap": w.forbidden_overlap,
                "reprojected_overlap": again,
                "reprojection_error": (again - w.forbidden_overlap).abs(),
                "system_state": state_terms(&w.system_state),
                "env_state": state_terms(&w.env_state),
            })
        }
    };
    Ok(Outcome {
        results,
        diagnostics: Vec::new(),
        events: Vec::new(),
    })
}

fn default_claims(world: &LatticeWorld) -> Result<Vec<RecordClaim>, CliError> {
    let device = world
        .particles()
        .iter()
        .find(|p| p.kind == ParticleKind::Measuring)
        .ok_or_else(|| CliError::Validation("forge-audit needs a measuring particle".into()))?;
    Ok(vec![RecordClaim { device: device.id, value: 1 }])
}

fn forge(s: &Scenario) -> Result<Outcome, CliError> {
    let world = s.world()?;
    let claims = match &s.parameters.claims {
        Some(c) => c.clone(),
        None => default_claims(&world)?,
    };
    let horizon = s.parameters.horizon.unwrap_or(5);
    let r = forge_and_audit(&world, &claims, horizon)?;
    let norm = check_norm(&r.final_state, "forged final state")?;
    let sim = simulate(&world, &r.initial, horizon, 0.0)?;
    Ok(Outcome {
        results: json!({
            "horizon": horizon,
            "target_claims": to_value(&claims),
            "carried_claims": to_value(&r.claims),
            "round_trip_error": r.round_trip_error,
            "final_norm": norm,
            "any_invalid": r.verdict.any_invalid(),
            "verdict": to_value(&r.verdict),
            "initial_state": state_terms(&r.initial),
        }),
        diagnostics: Vec::new(),
        events: sim.log.lines().iter().map(to_value).collect(),
    })
}

fn reversal(s: &Scenario) -> Result<Outcome, CliError> {
    let world = s.world()?;
    let initial = s.initial()?.lattice_state(&world)?;
    let steps = s.parameters.steps.unwrap_or(4);
    let forward = run(&world, &initial, steps)?;
    check_norm(&forward, "forward state")?;
    let back = reverse_run(&world, &forward, steps)?;
    let norm = check_norm(&back, "reversed state")?;
    let before = branch_decompose(&world, &initial)?.len();
    let after_forward = branch_decompose(&world, &forward)?.len();
    let after_reverse = branch_decompose(&world, &back)?.len();
    Ok(Outcome {
        results: json!({
            "steps": steps,
            "initial_branches": before,
            "forward_branches": after_forward,
            "reversed_branches": after_reverse,
            "recovery_error": back.max_abs_diff(&initial),
            "final_norm": norm,
        }),
        diagnostics: Vec::new(),
        events: Vec::new(),
    })
}

fn thermal(p: &Parameters) -> Result<Outcome, CliError> {
    let m = p.m.unwrap_or(3);
    let contacts = p.contacts.unwrap_or(20);
    let coupling = p.coupling.unwrap_or(0.5);
    let world = bath_world(m, contacts)?;
    let a = world.basis_state(&bath_configuration(&world, 1))?;
    let b = world.basis_state(&bath_configuration(&world, 2 % m))?;
    // bath particle i reaches the device at time i and interacts during the
    // following step, so contact i is complete after step i + 1
    let trace = thermal_trace(&world, &a, &b, contacts as usize + 1, coupling)?;
    let per_contact: Vec<_> = trace.iter().skip(1).collect();
    let overlaps: Vec<f64> = per_contact.iter().map(|t| t.bath_overlap).collect();
    let strictly = overlaps.windows(2).all(|w| w[1] < w[0]);
    let nonincreasing = trace.windows(2).all(|w| w[1].bath_overlap <= w[0].bath_overlap + 1e-15);
    let last = trace.last().expect("at least the initial sample");
    Ok(Outcome {
        results: json!({
            "m": m,
            "contacts": contacts,
            "coupling": coupling,
            "final_ready_population": last.ready_population,
            "final_bath_overlap": last.bath_overlap,
            "overlap_strictly_decreasing_per_contact": strictly,
            "overlap_nonincreasing": nonincreasing,
            "trace": trace.iter().map(|t| json!({
                "step": t.step,
                "ready_population": t.ready_population,
                "bath_overlap": t.bath_overlap,
            })).collect::<Vec<_>>(),
        }),
        diagnostics: Vec::new(),
        events: Vec::new(),
    })
}

fn epr(p: &Parameters, knobs: &Knobs) -> Result<Outcome, CliError> {
    let [a, b] = p.angles.unwrap_or([0.0, 0.0]);
    let setup = epr_setup(a, b);
    let initial = setup.prepare(&singlet_system())?;
    let out = run_schedule(&setup, &initial)?;
    let norm = check_norm(&out.state, "final state")?;
    let dist = outcome_distribution(&out.state, &setup);
    let samples = samples_of(p, knobs);
    let weights = dist.weights();
    let counts = sample_counts(&weights, knobs.seed, samples)?;
    let labels = dist.outcomes().iter().map(to_value).collect();
    let (table, worst) = sample_table(labels, &weights, &counts, samples);
    Ok(Outcome {
        results: json!({
            "angles": [a, b],
            "final_norm": norm,
            "parallel_probability": epr_parallel_probability(&dist),
            "up_down_probability": dist.get(&[2]),
            "down_up_probability": dist.get(&[3]),
            "samples": samples,
            "max_abs_z": worst,
            "outcomes": table,
        }),
        events: abstract_events(&setup, &dist, &out.diagnostics),
        diagnostics: out.diagnostics.iter().map(to_value).collect(),
    })
}
