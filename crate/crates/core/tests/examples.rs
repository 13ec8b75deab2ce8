//! Every example runs in quick mode.

macro_rules! example {
    ($name:ident) => {
        #[allow(dead_code)]
        mod $name {
            include!(concat!(
                env!("CARGO_MANIFEST_DIR"),
                "/examples/",
                stringify!($name),
                ".rs"
            ));
        }
    };
}

example!(image_pipeline);
example!(learn_codebook);
example!(sparse_solvers);
example!(model_evolution);
example!(cotrain);
example!(controlled_experiment);
example!(outlier_sweep);
example!(centroid_sweep);
example!(pipeline_commands);

#[test]
fn image_pipeline_runs() {
    image_pipeline::run(true).unwrap();
}

#[test]
fn learn_codebook_runs() {
    learn_codebook::run(true).unwrap();
}

#[test]
fn sparse_solvers_runs() {
    sparse_solvers::run(true).unwrap();
}

#[test]
fn model_evolution_runs() {
    model_evolution::run(true).unwrap();
}

#[test]
fn cotrain_runs() {
    cotrain::run(true).unwrap();
}

#[test]
fn controlled_experiment_runs() {
    controlled_experiment::run(true).unwrap();
}

#[test]
fn outlier_sweep_runs() {
    outlier_sweep::run(true).unwrap();
}

#[test]
fn centroid_sweep_runs() {
    centroid_sweep::run(true, &[4, 8]).unwrap();
}

#[test]
fn pipeline_commands_runs() {
    pipeline_commands::run(true).unwrap();
}
