//! Built-in example automata and families, used by the CLI `examples`
//! subcommand and throughout the test suite.
//!
//! The four automata exercise every classification outcome:
//! - `case0`: one state, bets everything on "0"; dies on the first "1".
//! - `case1(p1, p2)`: two states that each bet everything on one symbol,
//!   hopping between them independently of the input; ruins exponentially
//!   except at the p1 = p2 = 1/2 boundary, where it secretly never bets.
//! - `case2`: four states whose bets cancel along a common fixed direction;
//!   capital stabilizes on normal input.
//! - `fig1`: a small four-state automaton over the alphabet {a, b} used in
//!   the expected-capital examples.

use crate::betting::BettingAutomaton;
use crate::family::MatrixFamily;
use crate::linalg::NonNegMatrix;
use crate::scalar::{int, rat, Mode, Scalar};
use crate::Result;

fn dense(rows: Vec<Vec<Scalar>>) -> NonNegMatrix {
    NonNegMatrix::from_rows(rows).expect("preset matrix")
}

/// One state, gamma = (2, 0): everything on "0" every round.
pub fn case0_automaton() -> BettingAutomaton {
    BettingAutomaton::new(
        vec!["s0".into()],
        vec!["0".into(), "1".into()],
        0,
        vec![vec![vec![int(1)], vec![int(1)]]],
        vec![vec![int(2), int(0)]],
        Mode::Exact,
    )
    .expect("case0 preset")
}

pub fn case0_family() -> MatrixFamily {
    case0_automaton().to_matrix_family().expect("case0 family").0
}

/// Two states: state s0 bets everything on "0", state s1 everything on "1".
/// The state hops with probabilities independent of the observed symbol:
/// from s0 stay with p1, from s1 stay with p2.
pub fn case1_automaton(p1: Scalar, p2: Scalar) -> Result<BettingAutomaton> {
    let one = Mode::Exact.one();
    let aut = BettingAutomaton::new(
        vec!["s0".into(), "s1".into()],
        vec!["0".into(), "1".into()],
        0,
        vec![
            vec![
                vec![p1.clone(), &one - &p1],
                vec![p1.clone(), &one - &p1],
            ],
            vec![
                vec![&one - &p2, p2.clone()],
                vec![&one - &p2, p2.clone()],
            ],
        ],
        vec![vec![int(2), int(0)], vec![int(0), int(2)]],
        Mode::Exact,
    )?;
    aut.validated()?;
    Ok(aut)
}

pub fn case1_family(p1: Scalar, p2: Scalar) -> Result<MatrixFamily> {
    Ok(case1_automaton(p1, p2)?.to_matrix_family()?.0)
}

/// The default parameters used by the CLI: p1 = 3/10, p2 = 3/5.
pub fn case1_default_family() -> MatrixFamily {
    case1_family(rat(3, 10), rat(3, 5)).expect("case1 preset")
}

/// Four states; the common transition kernel is combined with bets
/// gamma(., "0") = (2, 0, 2, 0) and gamma(., "1") = (0, 2, 0, 2).
pub fn case2_automaton() -> BettingAutomaton {
    let kernel = vec![
        vec![rat(1, 8), rat(5, 8), rat(1, 4), int(0)],
        vec![rat(1, 10), rat(1, 2), rat(2, 5), int(0)],
        vec![rat(1, 4), int(0), rat(1, 3), rat(5, 12)],
        vec![rat(3, 10), int(0), rat(1, 5), rat(1, 2)],
    ];
    let delta = kernel.iter().map(|row| vec![row.clone(), row.clone()]).collect();
    let gamma = vec![
        vec![int(2), int(0)],
        vec![int(0), int(2)],
        vec![int(2), int(0)],
        vec![int(0), int(2)],
    ];
    BettingAutomaton::new(
        vec!["s0".into(), "s1".into(), "s2".into(), "s3".into()],
        vec!["0".into(), "1".into()],
        0,
        delta,
        gamma,
        Mode::Exact,
    )
    .expect("case2 preset")
}

pub fn case2_family() -> MatrixFamily {
    case2_automaton().to_matrix_family().expect("case2 family").0
}

/// Four-state automaton over {a, b} with bets (1,1), (3/2,1/2), (1/2,3/2),
/// (1/2,3/2); the running example for expected capital.
pub fn fig1_automaton() -> BettingAutomaton {
    let h = rat(1, 2);
    let delta = vec![
        // s0
        vec![
            vec![int(0), int(1), int(0), int(0)],
            vec![int(0), int(0), h.clone(), h.clone()],
        ],
        // s1
        vec![
            vec![int(0), int(1), int(0), int(0)],
            vec![int(0), int(0), int(0), int(1)],
        ],
        // s2
        vec![
            vec![int(0), int(0), h.clone(), h.clone()],
            vec![int(0), int(0), int(1), int(0)],
        ],
        // s3
        vec![
            vec![h.clone(), h.clone(), int(0), int(0)],
            vec![int(0), int(0), int(0), int(1)],
        ],
    ];
    let gamma = vec![
        vec![int(1), int(1)],
        vec![rat(3, 2), rat(1, 2)],
        vec![rat(1, 2), rat(3, 2)],
        vec![rat(1, 2), rat(3, 2)],
    ];
    BettingAutomaton::new(
        vec!["s0".into(), "s1".into(), "s2".into(), "s3".into()],
        vec!["a".into(), "b".into()],
        0,
        delta,
        gamma,
        Mode::Exact,
    )
    .expect("fig1 preset")
}

/// A 6-state fair family whose index graph has two SCCs: the first block is
/// the default case1 pair with a little mass leaking into the second block
/// (the case2 family). Restricted to its own block, the first component is
/// strictly superfair. Exercises the general (non-strongly-connected)
/// classifier.
pub fn leakage_family() -> MatrixFamily {
    let c2 = case2_family();
    let mut m0_rows = vec![
        // case1 row with M0(1,1) split as 1/2 + 1/10 leaked to state 3.
        vec![rat(1, 2), rat(7, 5), rat(1, 10), int(0), int(0), int(0)],
        vec![int(0); 6],
    ];
    let mut m1_rows = vec![
        vec![int(0); 6],
        vec![rat(4, 5), rat(6, 5), int(0), int(0), int(0), int(0)],
    ];
    for i in 0..4 {
        let mut r0 = vec![int(0), int(0)];
        r0.extend(c2.matrix(0).row(i).to_vec());
        m0_rows.push(r0);
        let mut r1 = vec![int(0), int(0)];
        r1.extend(c2.matrix(1).row(i).to_vec());
        m1_rows.push(r1);
    }
    MatrixFamily::new(
        vec!["0".into(), "1".into()],
        vec![dense(m0_rows), dense(m1_rows)],
        Mode::Exact,
    )
    .expect("leakage preset")
}
