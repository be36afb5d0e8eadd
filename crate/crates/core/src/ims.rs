//! Interleaved multi-start scheme.
//!
//! Population `i` (0-based) has `n_base · 2^i` members and performs one
//! generation each time population `i - 1` has completed `c` generations.
//! Smaller populations keep running after larger ones start.

/// Something that advances in generations under a shared context `C`.
pub trait Generational<C> {
    fn run_generation(&mut self, ctx: &mut C);
    fn generations(&self) -> u64;
    fn population_size(&self) -> usize;
    /// True once further generations cannot change the population.
    fn is_converged(&self) -> bool {
        false
    }
}

pub trait Interrupt {
    fn should_stop(&self) -> bool;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ImsConfig {
    pub n_base: usize,
    pub c: u64,
    pub max_populations: usize,
}

impl Default for ImsConfig {
    fn default() -> Self {
        Self {
            n_base: 16,
            c: 4,
            max_populations: 12,
        }
    }
}

#[derive(Debug)]
pub struct ImsState<P> {
    config: ImsConfig,
    populations: Vec<P>,
}

impl<P> ImsState<P> {
    pub fn new(config: ImsConfig) -> Self {
        Self {
            config,
            populations: Vec::new(),
        }
    }

    pub fn config(&self) -> ImsConfig {
        self.config
    }

    pub fn populations(&self) -> &[P] {
        &self.populations
    }

    /// Size of population `index` (0-based).
    pub fn size_of(&self, index: usize) -> usize {
        self.config.n_base << index
    }

    /// One generation of the smallest population plus every larger
    /// generation that falls due. `spawn(index, size, ctx)` creates a
    /// population the first time the schedule reaches it. Returns whether
    /// any generation ran.
    pub fn step<C: Interrupt>(&mut self, ctx: &mut C, spawn: &mut impl FnMut(usize, usize, &mut C) -> P) -> bool
    where
        P: Generational<C>,
    {
        self.advance(0, ctx, spawn)
    }

    fn advance<C: Interrupt>(
        &mut self,
        index: usize,
        ctx: &mut C,
        spawn: &mut impl FnMut(usize, usize, &mut C) -> P,
    ) -> bool
    where
        P: Generational<C>,
    {
        if ctx.should_stop() {
            return false;
        }
        if index == self.populations.len() {
            if index >= self.config.max_populations {
                return false;
            }
            let size = self.size_of(index);
            let population = spawn(index, size, ctx);
            self.populations.push(population);
            if ctx.should_stop() {
                return false;
            }
        }
        self.populations[index].run_generation(ctx);
        if self.populations[index].generations() % self.config.c == 0 {
            self.advance(index + 1, ctx, spawn);
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Counter {
        size: usize,
        gens: u64,
    }

    struct Log(Vec<usize>);

    impl Interrupt for Log {
        fn should_stop(&self) -> bool {
            false
        }
    }

    impl Generational<Log> for (usize, Counter) {
        fn run_generation(&mut self, ctx: &mut Log) {
            self.1.gens += 1;
            ctx.0.push(self.0);
        }
        fn generations(&self) -> u64 {
            self.1.gens
        }
        fn population_size(&self) -> usize {
            self.1.size
        }
    }

    fn simulate(config: ImsConfig, steps: usize) -> (ImsState<(usize, Counter)>, Log) {
        let mut ims = ImsState::new(config);
        let mut log = Log(Vec::new());
        let mut spawn = |i: usize, size: usize, _: &mut Log| (i, Counter { size, gens: 0 });
        for _ in 0..steps {
            ims.step(&mut log, &mut spawn);
        }
        (ims, log)
    }

    #[test]
    fn second_population_after_c_generations() {
        let cfg = ImsConfig {
            n_base: 16,
            c: 4,
            max_populations: 10,
        };
        let (ims, log) = simulate(cfg, 4);
        assert_eq!(log.0, vec![0, 0, 0, 0, 1]);
        let sizes: Vec<usize> = ims.populations().iter().map(|p| p.population_size()).collect();
        assert_eq!(sizes, vec![16, 32]);
        let (ims, _) = simulate(cfg, 64);
        let sizes: Vec<usize> = ims.populations().iter().map(|p| p.population_size()).collect();
        assert_eq!(sizes, vec![16, 32, 64, 128]);
    }

    #[test]
    fn unit_interleave_is_lockstep() {
        let cfg = ImsConfig {
            n_base: 4,
            c: 1,
            max_populations: 3,
        };
        let (ims, log) = simulate(cfg, 3);
        assert_eq!(log.0, vec![0, 1, 2, 0, 1, 2, 0, 1, 2]);
        assert!(ims.populations().iter().all(|p| p.generations() == 3));
    }
}
