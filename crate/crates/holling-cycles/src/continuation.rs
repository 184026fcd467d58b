//! One-parameter cycle families, folds, scenario, and audits.
