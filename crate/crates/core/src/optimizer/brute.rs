use super::{BasketInstance, BasketSolution, OptimizerError, Proof};

pub const BRUTE_FORCE_MAX_N: usize = 20;

/// Exact optimum by enumerating all 2^n subsets. Ties go to the
/// lexicographically smallest sorted index list.
pub fn brute_force_basket(inst: &BasketInstance) -> Result<BasketSolution, OptimizerError> {
    inst.validate()?;
    let n = inst.n();
    if n > BRUTE_FORCE_MAX_N {
        return Err(OptimizerError::TooLarge(n));
    }
    let mut best: Option<(i64, Vec<usize>)> = None;
    for mask in 0u32..(1u32 << n) {
        let selected: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
        if inst.spend(&selected) > inst.budget {
            continue;
        }
        let obj = inst.objective(&selected);
        let better = match &best {
            None => true,
            Some((b, sel)) => obj > *b || (obj == *b && selected < *sel),
        };
        if better {
            best = Some((obj, selected));
        }
    }
    // the empty set is always feasible
    let (_, selected) = best.expect("empty selection is feasible");
    Ok(BasketSolution::from_selection(inst, selected, Proof::Optimal))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_instance() {
        let s = brute_force_basket(&BasketInstance::new(vec![], vec![], 0)).unwrap();
        assert!(s.selected.is_empty());
        assert_eq!(s.objective, 0);
    }

    #[test]
    fn all_negative_values_select_nothing() {
        let inst = BasketInstance::new(vec![-5, -1, -100], vec![1, 1, 1], 10);
        assert!(brute_force_basket(&inst).unwrap().selected.is_empty());
    }

    #[test]
    fn ties_prefer_lexicographically_smallest() {
        let inst = BasketInstance::new(vec![5, 5, 5], vec![1, 1, 1], 1);
        assert_eq!(brute_force_basket(&inst).unwrap().selected, vec![0]);
        let inst = BasketInstance::new(vec![0, 5], vec![1, 1], 2);
        // {1} and {0,1} tie at 5; [0, 1] < [1]
        assert_eq!(brute_force_basket(&inst).unwrap().selected, vec![0, 1]);
    }

    #[test]
    fn refuses_large() {
        let inst = BasketInstance::new(vec![1; 21], vec![1; 21], 5);
        assert_eq!(brute_force_basket(&inst), Err(OptimizerError::TooLarge(21)));
    }
}
