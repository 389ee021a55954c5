use std::collections::VecDeque;
use std::io::{self, Write};

use super::StateSpaceError;
use crate::san::Marking;
use crate::Scalar;

/// Tangible-state CTMC in compressed sparse row form.
///
/// Row `i` lists the transitions leaving state `i`, sorted by target. There
/// are no self-loops and every rate is strictly positive.
#[derive(Debug, Clone, PartialEq)]
pub struct Ctmc<T> {
    pub(crate) states: Vec<Marking>,
    pub(crate) row_offsets: Vec<usize>,
    pub(crate) targets: Vec<u32>,
    pub(crate) rates: Vec<T>,
    pub(crate) initial: Vec<T>,
}

impl<T: Scalar> Ctmc<T> {
    /// Builds a chain from an explicit transition list. Duplicate
    /// `(from, to)` pairs are summed.
    ///
    /// Rejects self-loops, non-positive rates, an initial vector that does
    /// not sum to one, and states unreachable from the initial support.
    pub fn from_transitions(
        states: Vec<Marking>,
        transitions: &[(usize, usize, T)],
        initial: Vec<T>,
    ) -> Result<Self, StateSpaceError> {
        let n = states.len();
        if initial.len() != n {
            return Err(StateSpaceError::InvalidChain(format!(
                "initial vector has {} entries for {} states",
                initial.len(),
                n
            )));
        }
        let mut rows: Vec<Vec<(u32, T)>> = vec![Vec::new(); n];
        for &(from, to, rate) in transitions {
            if from >= n || to >= n {
                return Err(StateSpaceError::InvalidChain(format!(
                    "transition {from}->{to} outside {n} states"
                )));
            }
            if from == to {
                return Err(StateSpaceError::InvalidChain(format!(
                    "self-loop on {from}"
                )));
            }
            if !(rate > T::zero() && rate.is_finite()) {
                return Err(StateSpaceError::InvalidChain(format!(
                    "rate {rate} on {from}->{to}"
                )));
            }
            let row = &mut rows[from];
            match row.iter_mut().find(|(t, _)| *t as usize == to) {
                Some(entry) => entry.1 = entry.1 + rate,
                None => row.push((to as u32, rate)),
            }
        }
        let chain = Self::from_rows(states, rows, initial);
        chain.check()?;
        Ok(chain)
    }

    pub(crate) fn from_rows(
        states: Vec<Marking>,
        rows: Vec<Vec<(u32, T)>>,
        initial: Vec<T>,
    ) -> Self {
        let mut row_offsets = Vec::with_capacity(rows.len() + 1);
        let mut targets = Vec::new();
        let mut rates = Vec::new();
        row_offsets.push(0);
        for mut row in rows {
            row.sort_by_key(|(t, _)| *t);
            for (t, r) in row {
                targets.push(t);
                rates.push(r);
            }
            row_offsets.push(targets.len());
        }
        Ctmc {
            states,
            row_offsets,
            targets,
            rates,
            initial,
        }
    }

    fn check(&self) -> Result<(), StateSpaceError> {
        let total: T = self.initial.iter().copied().sum();
        if (total - T::one()).abs() > T::probability_tolerance()
            || self.initial.iter().any(|&p| p < T::zero())
        {
            return Err(StateSpaceError::InvalidChain(format!(
                "initial distribution sums to {total}"
            )));
        }
        let mut seen = vec![false; self.num_states()];
        let mut queue: VecDeque<usize> = self
            .initial
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > T::zero())
            .map(|(i, _)| i)
            .collect();
        for &i in &queue {
            seen[i] = true;
        }
        while let Some(i) = queue.pop_front() {
            for (j, _) in self.transitions_from(i) {
                if !seen[j] {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
        if let Some(i) = seen.iter().position(|s| !s) {
            return Err(StateSpaceError::InvalidChain(format!(
                "state {i} unreachable from the initial support"
            )));
        }
        Ok(())
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_transitions(&self) -> usize {
        self.targets.len()
    }

    pub fn states(&self) -> &[Marking] {
        &self.states
    }

    pub fn marking(&self, state: usize) -> &Marking {
        &self.states[state]
    }

    pub fn initial(&self) -> &[T] {
        &self.initial
    }

    pub fn transitions_from(&self, state: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let span = self.row_offsets[state]..self.row_offsets[state + 1];
        self.targets[span.clone()]
            .iter()
            .zip(&self.rates[span])
            .map(|(&t, &r)| (t as usize, r))
    }

    /// Total rate out of `state`.
    pub fn exit_rate(&self, state: usize) -> T {
        self.transitions_from(state).map(|(_, r)| r).sum()
    }

    pub fn max_exit_rate(&self) -> T {
        (0..self.num_states())
            .map(|s| self.exit_rate(s))
            .fold(T::zero(), T::max)
    }

    pub fn is_absorbing(&self, state: usize) -> bool {
        self.row_offsets[state] == self.row_offsets[state + 1]
    }

    /// Writes the chain as text: a `states=N initial=i:p,...` header, then
    /// one `from<TAB>to<TAB>rate` line per transition.
    pub fn write_dump<W: Write>(&self, mut out: W) -> io::Result<()> {
        let initial: Vec<String> = self
            .initial
            .iter()
            .enumerate()
            .filter(|(_, &p)| p > T::zero())
            .map(|(i, p)| format!("{i}:{p}"))
            .collect();
        writeln!(
            out,
            "states={} initial={}",
            self.num_states(),
            initial.join(",")
        )?;
        for s in 0..self.num_states() {
            for (t, r) in self.transitions_from(s) {
                writeln!(out, "{s}\t{t}\t{r}")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_state(l: f64, m: f64) -> Ctmc<f64> {
        Ctmc::from_transitions(
            vec![Marking::new(vec![1, 0]), Marking::new(vec![0, 1])],
            &[(0, 1, l), (1, 0, m)],
            vec![1.0, 0.0],
        )
        .unwrap()
    }

    #[test]
    fn dump_format() {
        let c = two_state(0.5, 2.0);
        let mut buf = Vec::new();
        c.write_dump(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "states=2 initial=0:1\n0\t1\t0.5\n1\t0\t2\n"
        );
    }

    #[test]
    fn rejects_self_loops_and_bad_rates() {
        let s = vec![Marking::new(vec![0])];
        assert!(Ctmc::from_transitions(s.clone(), &[(0, 0, 1.0)], vec![1.0]).is_err());
        let s2 = vec![Marking::new(vec![0]), Marking::new(vec![1])];
        assert!(Ctmc::from_transitions(s2.clone(), &[(0, 1, 0.0)], vec![1.0, 0.0]).is_err());
        assert!(Ctmc::from_transitions(s2, &[], vec![1.0, 0.0]).is_err());
    }

    #[test]
    fn duplicate_transitions_are_summed() {
        let c = Ctmc::from_transitions(
            vec![Marking::new(vec![0]), Marking::new(vec![1])],
            &[(0, 1, 1.0), (0, 1, 2.0)],
            vec![1.0, 0.0],
        )
        .unwrap();
        assert_eq!(c.num_transitions(), 1);
        assert_eq!(c.exit_rate(0), 3.0);
        assert!(c.is_absorbing(1));
    }
}
