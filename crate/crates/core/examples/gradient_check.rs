//! Finite-difference gradient checks: one recurrent kernel in isolation and a
//! whole SCRNN at a toy input length, both in 64-bit mode.

use amc_core::models::{build_scrnn, check_model_gradients, ScrnnVariant};
use amc_core::nn::{
    grad_check, rnn_sequence, rnn_sequence_backward, FnObjective, GradCheckConfig, RnnCellParams, RnnKind,
    StateActivation,
};
use amc_core::{SeededRng, Tensor};

fn main() -> amc_core::Result<()> {
    let cfg = GradCheckConfig::default();
    let mut rng = SeededRng::new(1);
    let (t, f, h) = (7, 3, 4);
    let x = Tensor::<f64>::from_f64(vec![t, f], &(0..t * f).map(|_| rng.normal()).collect::<Vec<_>>())?;

    for kind in [RnnKind::Lstm, RnnKind::Gru, RnnKind::Simple] {
        let cell = RnnCellParams::<f64>::init(kind, f, h, StateActivation::Tanh, &mut rng)?;
        // Loss = Σ c·y for a fixed random c, so dL/dy = c.
        let c = Tensor::<f64>::from_f64(vec![t, h], &(0..t * h).map(|_| rng.normal()).collect::<Vec<_>>())?;
        let params = vec![cell.input_weights.clone(), cell.recurrent_weights.clone(), cell.biases.clone()];
        let mut obj = FnObjective::new(params, |p: &[Tensor<f64>]| {
            let cp = RnnCellParams {
                input_weights: p[0].clone(),
                recurrent_weights: p[1].clone(),
                biases: p[2].clone(),
                ..cell.clone()
            };
            let (y, cache) = rnn_sequence(&cp, &x, true)?;
            let loss = y.data().iter().zip(c.data()).map(|(a, b)| a * b).sum();
            let g = rnn_sequence_backward(&cp, &cache, &c)?;
            Ok((loss, vec![g.input_weights, g.recurrent_weights, g.biases]))
        });
        let rep = grad_check(&mut obj, &cfg)?;
        println!("{kind:?} cell, T={t}: max relative error {:.2e} over {} coordinates", rep.max_rel_error, rep.coordinates_checked);
    }

    let spec = build_scrnn(ScrnnVariant::default())?.with_input_len(12)?;
    let rep = check_model_gradients(&spec, 0, &cfg)?;
    println!(
        "default SCRNN, T=12 ({} parameters): max relative error {:.2e} over {} coordinates, {} skipped at kinks",
        spec.count_params()?,
        rep.max_rel_error,
        rep.coordinates_checked,
        rep.kinks_skipped
    );
    Ok(())
}
