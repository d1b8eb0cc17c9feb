use super::CoalitionError;

/// A strategic-form coalitional game: a coalition's value depends only on its
/// own members.
pub trait CoalitionalGame {
    fn value(&self, coalition: &[usize]) -> f64;
}

impl<F: Fn(&[usize]) -> f64> CoalitionalGame for F {
    fn value(&self, coalition: &[usize]) -> f64 {
        self(coalition)
    }
}

/// Sorts members within coalitions and coalitions by their smallest member,
/// dropping empty ones.
pub fn normalize(mut partition: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    partition.retain(|c| !c.is_empty());
    for c in &mut partition {
        c.sort_unstable();
    }
    partition.sort_unstable_by_key(|c| c[0]);
    partition
}

fn try_merge<G: CoalitionalGame + ?Sized>(partition: &mut Vec<Vec<usize>>, game: &G) -> bool {
    let values: Vec<f64> = partition.iter().map(|c| game.value(c)).collect();
    for i in 0..partition.len() {
        for j in i + 1..partition.len() {
            let mut union = [partition[i].as_slice(), partition[j].as_slice()].concat();
            union.sort_unstable();
            if game.value(&union) > values[i] + values[j] {
                partition[i] = union;
                partition.remove(j);
                return true;
            }
        }
    }
    false
}

fn try_split<G: CoalitionalGame + ?Sized>(partition: &mut Vec<Vec<usize>>, game: &G) -> bool {
    for i in 0..partition.len() {
        let c = &partition[i];
        let k = c.len();
        if k < 2 {
            continue;
        }
        assert!(k <= 25, "split enumeration over {k} members is too large");
        let whole = game.value(c);
        // the first member always stays in the left part
        for mask in 0..(1u32 << (k - 1)) - 1 {
            let (mut left, mut right) = (vec![c[0]], Vec::new());
            for (b, &u) in c[1..].iter().enumerate() {
                if mask >> b & 1 == 1 {
                    left.push(u);
                } else {
                    right.push(u);
                }
            }
            // mask == all-ones would leave `right` empty; the range excludes it
            if game.value(&left) + game.value(&right) > whole {
                partition[i] = left;
                partition.push(right);
                return true;
            }
        }
    }
    false
}

/// Merge-and-split: apply any improving pairwise merge, then any improving
/// two-way split, in first-improvement order, until neither exists.
pub fn merge_split<G: CoalitionalGame + ?Sized>(
    partition0: Vec<Vec<usize>>,
    game: &G,
    max_steps: usize,
) -> Result<Vec<Vec<usize>>, CoalitionError> {
    let mut partition = normalize(partition0);
    let mut steps = 0;
    loop {
        let changed = if try_merge(&mut partition, game) { true } else { try_split(&mut partition, game) };
        if !changed {
            return Ok(partition);
        }
        partition = normalize(partition);
        steps += 1;
        if steps > max_steps {
            return Err(CoalitionError::StepLimit(max_steps));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn singletons(n: usize) -> Vec<Vec<usize>> {
        (0..n).map(|i| vec![i]).collect()
    }

    #[test]
    fn superadditive_reaches_grand_coalition() {
        let v = |c: &[usize]| (c.len() * c.len()) as f64;
        assert_eq!(merge_split(singletons(5), &v, 100).unwrap(), vec![vec![0, 1, 2, 3, 4]]);
    }

    #[test]
    fn additive_keeps_initial_partition() {
        let v = |c: &[usize]| c.len() as f64;
        let start = vec![vec![0, 2], vec![1], vec![3, 4]];
        assert_eq!(merge_split(start.clone(), &v, 100).unwrap(), start);
    }

    #[test]
    fn grand_coalition_splits_under_crowding() {
        let v = |c: &[usize]| -((c.len() * c.len()) as f64);
        assert_eq!(merge_split(vec![vec![0, 1, 2]], &v, 100).unwrap(), singletons(3));
    }
}
