//! Name-keyed factories for interchangeable algorithm implementations.

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown {kind} '{name}' (available: {available})")]
pub struct UnknownStrategy {
    pub kind: &'static str,
    pub name: String,
    pub available: String,
}

pub type Factory<T, C> = fn(&C) -> Box<T>;

struct Entry<T: ?Sized, C> {
    name: &'static str,
    summary: &'static str,
    factory: Factory<T, C>,
}

/// Maps strategy names to factories taking a shared configuration `C`.
pub struct Registry<T: ?Sized, C> {
    kind: &'static str,
    entries: Vec<Entry<T, C>>,
}

impl<T: ?Sized, C> Registry<T, C> {
    pub fn new(kind: &'static str) -> Self {
        Registry {
            kind,
            entries: Vec::new(),
        }
    }

    /// Registers `name`, replacing an earlier entry with the same name.
    pub fn register(
        &mut self,
        name: &'static str,
        summary: &'static str,
        factory: Factory<T, C>,
    ) -> &mut Self {
        self.entries.retain(|e| e.name != name);
        self.entries.push(Entry {
            name,
            summary,
            factory,
        });
        self
    }

    pub fn create(&self, name: &str, config: &C) -> Result<Box<T>, UnknownStrategy> {
        self.entries
            .iter()
            .find(|e| e.name == name)
            .map(|e| (e.factory)(config))
            .ok_or_else(|| UnknownStrategy {
                kind: self.kind,
                name: name.to_string(),
                available: self.names().join(", "),
            })
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.entries.iter().map(|e| e.name).collect()
    }

    /// `(name, summary)` pairs in registration order.
    pub fn describe(&self) -> Vec<(&'static str, &'static str)> {
        self.entries.iter().map(|e| (e.name, e.summary)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    trait Shape {
        fn sides(&self) -> usize;
    }
    struct Poly(usize);
    impl Shape for Poly {
        fn sides(&self) -> usize {
            self.0
        }
    }

    #[test]
    fn create_and_replace() {
        let mut r: Registry<dyn Shape, usize> = Registry::new("shape");
        r.register("tri", "three", |_| Box::new(Poly(3)));
        r.register("poly", "n sides", |n| Box::new(Poly(*n)));
        assert_eq!(r.create("poly", &7).unwrap().sides(), 7);
        r.register("tri", "still three", |_| Box::new(Poly(3)));
        assert_eq!(r.names(), vec!["poly", "tri"]);
        let err = r.create("square", &0).err().unwrap();
        assert_eq!(
            err.to_string(),
            "unknown shape 'square' (available: poly, tri)"
        );
    }
}
