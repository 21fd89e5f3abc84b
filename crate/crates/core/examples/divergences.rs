//! Every objective on one target/prediction pair, with its gradients.
//!
//! cargo run --example divergences

use bregman_bench::divergence::{
    entropy, evaluate_loss, gradient_wrt_logits, gradient_wrt_prediction, ClipPolicy, LossId,
};
use bregman_bench::{softmax, Logits, ProbVector};

fn main() -> bregman_bench::Result<()> {
    let clip = ClipPolicy::default();
    let p = ProbVector::new(vec![0.6, 0.3, 0.1])?;
    let z = Logits::new(vec![1.2, 0.4, -0.3])?;
    let q = softmax(&z);
    println!("target     {:?}", p.as_slice());
    println!("prediction {:.4?}\n", q.as_slice());

    println!("{:<18} {:>6} {:>10}  {:<28} logit gradient", "loss", "bregman", "value", "prediction gradient");
    for id in LossId::ALL {
        let v = evaluate_loss(id, &p, &q, &clip)?;
        let gq = gradient_wrt_prediction(id, &p, &q, &clip)?;
        let gz = gradient_wrt_logits(id, &p, &z, &clip)?;
        println!("{:<18} {:>6} {v:>10.6}  {:<28} {gz:+.4?}", id.name(), id.is_bregman(), format!("{gq:+.3?}"));
    }

    let ce = evaluate_loss(LossId::CrossEntropy, &p, &q, &clip)?;
    let kl = evaluate_loss(LossId::ForwardKl, &p, &q, &clip)?;
    println!("\ncross entropy - forward KL = {:.12}, entropy of target = {:.12}", ce - kl, entropy(&p, &clip));

    // a zero in the prediction: logs are clipped, values stay finite
    let hard = ProbVector::new(vec![0.0, 1.0, 0.0])?;
    for id in [LossId::ForwardKl, LossId::ItakuraSaito, LossId::ReverseKl] {
        println!("{:<14} against a one-hot prediction: {:.4}", id.name(), evaluate_loss(id, &p, &hard, &clip)?);
    }
    Ok(())
}
