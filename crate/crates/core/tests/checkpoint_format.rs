//! The on-disk checkpoint layout, pinned by a fixture written with Python's
//! `struct` module rather than by this crate.

use std::path::Path;

use surfsplat::trainer::{decode, encode, load_checkpoint, Group};

const FIXTURE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/golden_v1.ckpt");

#[test]
fn golden_fixture_decodes_to_known_values() {
    let c = load_checkpoint(Path::new(FIXTURE)).unwrap();
    assert_eq!(c.step, 42);
    let m = &c.model;
    assert_eq!((m.len(), m.sh_degree, m.active_sh_degree), (2, 1, 1));
    assert_eq!(m.centers, vec![[0.5, -1.25, 2.0], [3.0, 0.0, -0.75]]);
    assert_eq!(m.rotations, vec![[1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 0.0, 1.0]]);
    assert_eq!(m.log_scales, vec![[-2.0, -3.0], [-1.5, -1.5]]);
    assert_eq!(m.opacity_logits, vec![0.0, 2.5]);
    assert_eq!(m.sh[0][1], [0.03, 0.04, 0.05]);
    assert_eq!(m.sh[1][3][2], 2.0 * 0.01 * 11.0);
    assert_eq!(m.sh[1][4], [0.0; 3]);
    let o = c.optimizer.as_ref().unwrap();
    assert_eq!(o.step, 7);
    for (g, mo) in Group::ALL.iter().zip(&o.moments) {
        assert_eq!(mo.m.len(), 2 * g.stride());
        for (j, (m, v)) in mo.m.iter().zip(&mo.v).enumerate() {
            assert_eq!(*m, 0.125 * (j + 1) as f64);
            assert_eq!(*v, 0.5f64.powi((j % 8) as i32));
        }
    }
}

#[test]
fn encoding_reproduces_the_fixture_bytes() {
    let bytes = std::fs::read(FIXTURE).unwrap();
    assert_eq!(bytes.len(), 2829);
    assert_eq!(encode(&decode(&bytes).unwrap()).unwrap(), bytes);
}
