mod common;

use common::{gradient_check, random_batch};
use metores_core::model::{ModelConfig, ModelParams, Mode};

#[test]
fn tiny_config_all_groups_match_finite_differences() {
    let config = ModelConfig::tiny(30);
    let params = ModelParams::init(&config, 11).unwrap();
    let batch = random_batch(5, 30, 3, 6);
    // Every tensor first, then random extra coordinates.
    let n = params.tensor_names().len() * 8;
    let check = gradient_check(&params, &batch, Mode::Eval, n, 1e-4, 1e-4, 3);
    assert!(check.failures.is_empty(), "{:#?}", check.failures);
}

#[test]
fn tiny_config_with_dropout_matches_finite_differences() {
    let config = ModelConfig::tiny(30);
    let params = ModelParams::init(&config, 12).unwrap();
    let batch = random_batch(6, 30, 2, 6);
    let n = params.tensor_names().len() * 4;
    let check = gradient_check(&params, &batch, Mode::Train { dropout_seed: 99 }, n, 1e-4, 1e-4, 4);
    assert!(check.failures.is_empty(), "{:#?}", check.failures);
}

#[test]
fn desk_config_matches_finite_differences() {
    let config = ModelConfig::desk(60);
    let params = ModelParams::init(&config, 13).unwrap();
    let batch = random_batch(7, 60, 2, 8);
    let check = gradient_check(&params, &batch, Mode::Eval, 120, 1e-4, 1e-4, 5);
    assert!(check.checked >= 100);
    eprintln!("worst relative error {:e} at {}", check.worst_rel, check.worst_name);
    assert!(check.failures.is_empty(), "{:#?}", check.failures);
}
