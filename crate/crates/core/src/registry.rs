//! Name-keyed registries of interchangeable strategies (finite-difference
//! stencils, null-space solvers, ...), selected at runtime from configuration.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown {kind} `{name}` (available: {})", available.join(", "))]
pub struct UnknownStrategy {
    pub kind: &'static str,
    pub name: String,
    pub available: Vec<String>,
}

type Factory<T> = Box<dyn Fn() -> Box<T> + Send + Sync>;

pub struct Registry<T: ?Sized> {
    kind: &'static str,
    default: Option<String>,
    factories: BTreeMap<String, Factory<T>>,
}

impl<T: ?Sized> Registry<T> {
    pub fn new(kind: &'static str) -> Self {
        Registry {
            kind,
            default: None,
            factories: BTreeMap::new(),
        }
    }

    /// Adds or replaces an entry. The first entry registered becomes the default.
    pub fn register(&mut self, name: &str, factory: impl Fn() -> Box<T> + Send + Sync + 'static) -> &mut Self {
        if self.default.is_none() {
            self.default = Some(name.to_string());
        }
        self.factories.insert(name.to_string(), Box::new(factory));
        self
    }

    pub fn set_default(&mut self, name: &str) -> Result<(), UnknownStrategy> {
        if !self.factories.contains_key(name) {
            return Err(self.unknown(name));
        }
        self.default = Some(name.to_string());
        Ok(())
    }

    pub fn default_name(&self) -> Option<&str> {
        self.default.as_deref()
    }

    pub fn create(&self, name: &str) -> Result<Box<T>, UnknownStrategy> {
        self.factories.get(name).map(|f| f()).ok_or_else(|| self.unknown(name))
    }

    /// Creates the named entry, or the default when `name` is `None`.
    pub fn create_or_default(&self, name: Option<&str>) -> Result<Box<T>, UnknownStrategy> {
        match name.or(self.default.as_deref()) {
            Some(n) => self.create(n),
            None => Err(self.unknown("")),
        }
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.factories.keys().map(String::as_str)
    }

    pub fn contains(&self, name: &str) -> bool {
        self.factories.contains_key(name)
    }

    fn unknown(&self, name: &str) -> UnknownStrategy {
        UnknownStrategy {
            kind: self.kind,
            name: name.to_string(),
            available: self.factories.keys().cloned().collect(),
        }
    }
}

impl<T: ?Sized> fmt::Debug for Registry<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Registry")
            .field("kind", &self.kind)
            .field("default", &self.default)
            .field("names", &self.factories.keys().collect::<Vec<_>>())
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    trait Greeter {
        fn greet(&self) -> String;
    }

    struct Hello;
    impl Greeter for Hello {
        fn greet(&self) -> String {
            "hello".into()
        }
    }

    struct Hi;
    impl Greeter for Hi {
        fn greet(&self) -> String {
            "hi".into()
        }
    }

    #[test]
    fn lookup_and_default() {
        let mut r: Registry<dyn Greeter> = Registry::new("greeter");
        r.register("hello", || Box::new(Hello)).register("hi", || Box::new(Hi));
        assert_eq!(r.default_name(), Some("hello"));
        assert_eq!(r.create("hi").unwrap().greet(), "hi");
        assert_eq!(r.create_or_default(None).unwrap().greet(), "hello");
        r.set_default("hi").unwrap();
        assert_eq!(r.create_or_default(None).unwrap().greet(), "hi");
        let err = r.create("yo").err().unwrap();
        assert_eq!(err.to_string(), "unknown greeter `yo` (available: hello, hi)");
    }
}
