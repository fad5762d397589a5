//! Walks one regression tree through grow, change and prune proposals and
//! prints the Metropolis-Hastings ratios of each.

use bcf_ablation::data::Matrix;
use bcf_ablation::forest::{
    change_at, grow_at, propose_move, prune_at, CutpointGrids, MoveProbabilities, SplitRule,
    TreePrior, TreeState,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let x = Matrix::from_columns(vec![
        (0..40).map(|_| rng.random::<f64>()).collect(),
        (0..40).map(|_| rng.random::<f64>()).collect(),
    ])?;
    let grids = CutpointGrids::uniform(&x, 10);
    let prior = TreePrior::new(0.95, 2.0)?;
    let moves = MoveProbabilities::default();
    let mut state = TreeState::new(0.0, &x, &grids);
    println!("cutpoints for x1: {:?}", grids.feature(0));

    let root = state.tree().leaves()[0];
    let rule = SplitRule::new(0, grids.feature(0)[4]);
    let grow =
        grow_at(&state, root, rule, &x, &grids, &prior, &moves).ok_or("rule not valid at root")?;
    println!(
        "grow at root on {rule:?}: log transition {:.4}, log prior {:.4}, rows {:?}",
        grow.log_transition_ratio,
        grow.log_tree_prior_ratio,
        grow.rows_after().iter().map(Vec::len).collect::<Vec<_>>()
    );
    state.apply(&grow);
    println!("{}", state.tree().dump());

    let new_rule = SplitRule::new(1, grids.feature(1)[6]);
    if let Some(change) = change_at(&state, root, new_rule, &x, &grids, &prior, &moves) {
        println!(
            "change root to {new_rule:?}: log ratio {:.4}, admissible {}",
            change.log_ratio(),
            change.admissible
        );
    }

    let prune = prune_at(&state, root, &x, &grids, &prior, &moves).ok_or("root is not prunable")?;
    println!("prune root: log ratio {:.4}", prune.log_ratio());

    println!("random proposals from the split tree:");
    for _ in 0..5 {
        if let Some(p) = propose_move(&state, &x, &grids, &prior, &moves, &mut rng) {
            println!(
                "  {:?} at node {} -> log ratio {:.4}",
                p.kind,
                p.node,
                p.log_ratio()
            );
        }
    }
    Ok(())
}
