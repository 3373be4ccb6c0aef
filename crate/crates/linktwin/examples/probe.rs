//! Development probe: runs the full pipeline at paper scale and prints
//! timing plus accuracy figures. Not part of the test suite.

use std::time::Instant;

use linktwin::grid::ChannelGrid;
use linktwin::link_sim::{calibrate, transmit, OperatingPointTable, PowerProfile};
use linktwin::optimizer::{
    analytic_gradient, fd_gradient, gd_maximize, CapacityObjective, GdConfig,
};
use linktwin::profile_gen::{generate_batch, ProfileBatchSpec};
use linktwin::surrogate::{train, TrainConfig, TrainingSet};

fn main() {
    let grid = ChannelGrid::standard();
    let table = OperatingPointTable::builtin();
    let scenarios = calibrate(&table, &grid).unwrap();
    let sc = scenarios
        .iter()
        .find(|s| s.id.pump_ma == 150 && !s.id.gff)
        .unwrap();
    println!(
        "scenario {}: tx_total {:.3} dBm, sat core {:.3} mW",
        sc.id, sc.tx_total_dbm, sc.link.edfa.saturated_output_mw
    );

    let t0 = Instant::now();
    let spec = ProfileBatchSpec::new(1440, sc.tx_total_dbm, 7);
    let profiles = generate_batch(&spec).unwrap();
    println!("generate 1440 profiles: {:.2?}", t0.elapsed());

    let t0 = Instant::now();
    let mut inputs = Vec::new();
    let mut targets = Vec::new();
    for p in &profiles {
        let rx = transmit(p, &sc.link).unwrap();
        inputs.push(p.powers_dbm().to_vec());
        let mut t = rx.signal_dbm.clone();
        t.extend(rx.noise_dbm.clone());
        targets.push(t);
    }
    println!("simulate 1440 transmits: {:.2?}", t0.elapsed());

    let data = TrainingSet::new(inputs, targets, 1300, 140, 13).unwrap();
    let cfg = TrainConfig {
        seed: 5,
        ..TrainConfig::default()
    };
    let t0 = Instant::now();
    let outcome = train(&data, &cfg).unwrap();
    println!(
        "train 300 epochs: {:.2?}; final val MAE {:.4} dB, train MAE {:.4} dB",
        t0.elapsed(),
        outcome.validation_mae_db,
        outcome.training_mae_db
    );
    let c = &outcome.curves;
    for e in [0, 10, 50, 90, 99, 100, 101, 110, 150, 200, 299] {
        println!(
            "  epoch {e:3}: train {:.6} val {:.6}",
            c.train_mae[e], c.val_mae[e]
        );
    }

    // Flat-profile prediction error against the simulator.
    let flat = PowerProfile::flat(40, sc.tx_total_dbm);
    let rx = transmit(&flat, &sc.link).unwrap();
    let pred = outcome.model.forward(flat.powers_dbm()).unwrap();
    let max_err = rx
        .signal_dbm
        .iter()
        .zip(&pred.signal_dbm)
        .chain(rx.noise_dbm.iter().zip(&pred.noise_dbm))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0f64, f64::max);
    println!("flat-profile max abs prediction error: {max_err:.4} dB");

    // fd vs analytic gradient at the spec epsilon on the trained twin.
    let objective = CapacityObjective::default();
    let mut worst: f64 = 0.0;
    for (i, p) in profiles.iter().take(20).enumerate() {
        let eps = 1e-3 * p.total_mw() / 40.0;
        let fd = fd_gradient(&outcome.model, p, eps, &objective).unwrap();
        let an = analytic_gradient(&outcome.model, p, &objective).unwrap();
        let scale = an.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        let err = fd
            .gradient
            .iter()
            .zip(&an)
            .map(|(f, a)| (f - a).abs())
            .fold(0.0f64, f64::max)
            / scale;
        if err > worst {
            worst = err;
        }
        if i < 3 {
            println!("  pair {i}: fd/analytic rel err {err:.2e}");
        }
    }
    println!("fd vs analytic worst rel err over 20 pairs: {worst:.2e}");

    // GD from flat.
    let t0 = Instant::now();
    let gd_cfg = GdConfig {
        seed: 3,
        ..GdConfig::new(sc.tx_total_dbm)
    };
    let trace = gd_maximize(&outcome.model, &flat, &gd_cfg).unwrap();
    println!(
        "gd from flat: {:.2?}, {} iters, converged {}, C {:.4} -> {:.4} Tb/s",
        t0.elapsed(),
        trace.iterations.len(),
        trace.converged,
        trace.iterations[0].capacity_bps / 1e12,
        trace.final_capacity_bps / 1e12
    );

    // Twin capacity vs simulator capacity at the converged profile.
    let rx_opt = transmit(&trace.final_profile, &sc.link).unwrap();
    let sim_c = objective
        .of_outputs(&rx_opt.signal_dbm, &rx_opt.noise_dbm)
        .unwrap();
    println!(
        "twin C {:.4} Tb/s vs simulator C {:.4} Tb/s; rel err {:.4}%",
        trace.final_capacity_bps / 1e12,
        sim_c / 1e12,
        100.0 * (trace.final_capacity_bps - sim_c).abs() / sim_c
    );
}
