//! Shared demo systems used by tests and the CLI demo subcommands.

use crate::cocycle::{Cocycle, GroupTag};
use crate::covering::{net_ball_identity, FamilyMember, Region};
use crate::cocycle_cover::{CmcParams, WordSource};
use crate::mat::Mat;
use crate::sft::{higher_block, TransitionSystem, Word};
use std::collections::BTreeMap;

/// Family of inverses of a ball net: the canonical certifiable covering
/// family for an identity ball.
pub fn inverse_net_family(rho: f64, spacing: f64) -> Vec<FamilyMember> {
    let net = net_ball_identity(2, GroupTag::SpecialLinear, rho, spacing)
        .expect("ball net parameters");
    net.points
        .iter()
        .enumerate()
        .map(|(i, p)| FamilyMember {
            label: format!("inv{i}"),
            mat: p.inverse().expect("net points are invertible"),
        })
        .collect()
}

pub struct BlockGoldenFixture {
    pub cocycle: Cocycle,
    pub letters: Vec<Word>,
    pub region: Region,
    pub spacing: f64,
    pub source: WordSource,
    pub cmc: CmcParams,
}

/// A net-valued cocycle over the golden-mean shift, presented on its
/// 7-block recoding (34 letters, window radius 0): letter values are a
/// dyadic ladder of near-identity generators, so transition products
/// form a fine net around the identity and the covering condition
/// certifies for a small identity ball.
pub fn block_golden_fixture() -> BlockGoldenFixture {
    let block = higher_block(&TransitionSystem::golden_mean(), 7).expect("block recoding");
    let ts = block.induced;
    let n = ts.alphabet;
    assert_eq!(n, 34);
    let c = 0.05;
    let h_gen = Mat::diag(&[1.0, -1.0]);
    let s_gen = Mat::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
    let j_gen = Mat::from_rows(&[&[0.0, -1.0], &[1.0, 0.0]]);
    let mut algebra: Vec<Mat> = Vec::new();
    for level in [1.0, 0.5, 0.25, 0.125] {
        for gen in [&h_gen, &s_gen, &j_gen] {
            for sign in [1.0, -1.0] {
                algebra.push(gen.scale(sign * level * c));
            }
        }
    }
    // 24 ladder elements; pad with larger steps and identities to 34.
    for gen in [&h_gen, &s_gen, &j_gen] {
        for sign in [1.0, -1.0] {
            algebra.push(gen.scale(sign * 1.5 * c));
        }
    }
    while algebra.len() < n {
        algebra.push(Mat::zeros(2));
    }
    // Deterministic spread of the ladder over the letters.
    let mut table = BTreeMap::new();
    for (i, w) in ts.admissible_words(1).expect("letters").into_iter().enumerate() {
        let x = &algebra[(i * 13) % n];
        table.insert(w, x.exp());
    }
    let cocycle = Cocycle::new(ts, 2, GroupTag::SpecialLinear, 0, table).expect("fixture cocycle");
    let letters = vec![
        Word(vec![1]),
        Word(vec![10]),
        Word(vec![18]),
        Word(vec![27]),
    ];
    let region = Region::id_ball(2, 0.12, GroupTag::SpecialLinear);
    BlockGoldenFixture {
        cocycle,
        letters,
        region,
        spacing: 0.02,
        source: WordSource::Enumerate { max_len: 21 },
        cmc: CmcParams {
            spacing: 0.02,
            region_radius: 0.1,
            max_regions: 64,
            chain_advance: 40,
            max_rounds: 12,
            delta_samples: 240,
            seed: 5,
        },
    }
}

