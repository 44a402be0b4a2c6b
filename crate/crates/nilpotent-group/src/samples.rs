//! Standard example algebras used throughout the test suites and shipped
//! definition files.

use crate::{lie_validate, BracketEntry, LieAlgebra};
use graded_core::GradedStructure;

/// First Heisenberg algebra: weights (1,1,2), `[V1,V2] = V3`.
pub fn heisenberg() -> LieAlgebra {
    lie_validate(
        GradedStructure::new(&[1, 1, 2]).unwrap(),
        &[BracketEntry::of_int(1, 2, 3, 1, 1)],
    )
    .unwrap()
}

/// Engel algebra: weights (1,1,2,3), `[V1,V2] = V3`, `[V1,V3] = V4`.
pub fn engel() -> LieAlgebra {
    lie_validate(
        GradedStructure::new(&[1, 1, 2, 3]).unwrap(),
        &[
            BracketEntry::of_int(1, 2, 3, 1, 1),
            BracketEntry::of_int(1, 3, 4, 1, 1),
        ],
    )
    .unwrap()
}

/// Abelian algebra of dimension `n`, all weights 1, every bracket zero.
pub fn abelian(n: usize) -> LieAlgebra {
    lie_validate(GradedStructure::new(&vec![1; n]).unwrap(), &[]).unwrap()
}

/// Free step-2 algebra on three generators: weights (1,1,1,2,2,2) with
/// `[V1,V2] = V4`, `[V1,V3] = V5`, `[V2,V3] = V6`.
pub fn free_step2() -> LieAlgebra {
    lie_validate(
        GradedStructure::new(&[1, 1, 1, 2, 2, 2]).unwrap(),
        &[
            BracketEntry::of_int(1, 2, 4, 1, 1),
            BracketEntry::of_int(1, 3, 5, 1, 1),
            BracketEntry::of_int(2, 3, 6, 1, 1),
        ],
    )
    .unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn steps() {
        assert_eq!(heisenberg().step(), 2);
        assert_eq!(engel().step(), 3);
        assert_eq!(abelian(4).step(), 1);
        assert_eq!(free_step2().step(), 2);
    }
}
