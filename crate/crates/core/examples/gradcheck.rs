//! Check the analytic gradient of a whole recurrent step against central
//! differences in f64.
//!
//! cargo run --release --example gradcheck

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rsdn::autograd::{grad_check, Tape, Var};
use rsdn::model::{ModelConfig, Rsdn};
use rsdn::train::{total_loss_on_tape, LossWeights, Targets};
use rsdn::Tensor4;

fn main() -> rsdn::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let model = Rsdn::<f64>::new(
        ModelConfig {
            blocks: 1,
            channels: 4,
            ..ModelConfig::default()
        },
        &mut rng,
    )?;
    let frames: Vec<_> = (0..2).map(|_| Tensor4::uniform([1, 3, 8, 8], 0.0, 1.0, &mut rng)).collect();
    let targets = (0..2)
        .map(|_| Targets::from_hr(&Tensor4::uniform([1, 3, 32, 32], 0.0, 1.0, &mut rng), 4))
        .collect::<rsdn::Result<Vec<_>>>()?;
    let probe = Tensor4::uniform([1, 3, 32, 32], -1.0, 1.0, &mut rng);

    let f = |tape: &mut Tape<f64>, vars: &[Var]| -> rsdn::Result<Var> {
        let steps = model.bind_vars(tape, vars)?.unroll(tape, &frames)?;
        let (loss, _) = total_loss_on_tape(tape, &steps, &targets, &LossWeights::default())?;
        // the mean loss alone has tiny gradients; a random projection of the
        // output keeps every coordinate well above roundoff
        let p = tape.constant(probe.clone());
        let proj = tape.mul(steps[1].image, p)?;
        let proj = tape.sum(proj)?;
        tape.add(loss, proj)
    };
    let report = grad_check(f, model.params().tensors(), 2e-5, 8)?;
    let worst = report.worst.map(|(p, i)| format!("{}[{i}]", model.params().name(p)));
    println!(
        "{} coordinates checked, {} at ReLU kinks skipped, max relative error {:.2e} at {}",
        report.checked,
        report.kinks,
        report.max_rel_error,
        worst.unwrap_or_default()
    );
    Ok(())
}
