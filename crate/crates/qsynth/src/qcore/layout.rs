use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// An ordered list of named registers.
///
/// Qubit `0` is the first qubit of the first register and is the most
/// significant bit of a basis index. Zero-width registers are allowed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct RegisterLayout {
    regs: Vec<(String, usize)>,
}

impl RegisterLayout {
    pub fn new<S: Into<String>>(regs: impl IntoIterator<Item = (S, usize)>) -> Result<Self> {
        let mut out = RegisterLayout { regs: Vec::new() };
        for (name, width) in regs {
            out.push(name, width)?;
        }
        Ok(out)
    }

    /// A layout with a single register.
    pub fn single(name: &str, width: usize) -> Self {
        RegisterLayout { regs: vec![(name.to_string(), width)] }
    }

    pub fn push(&mut self, name: impl Into<String>, width: usize) -> Result<()> {
        let name = name.into();
        if self.regs.iter().any(|(n, _)| *n == name) {
            return Err(Error::NameCollision(name));
        }
        self.regs.push((name, width));
        Ok(())
    }

    pub fn width(&self) -> usize {
        self.regs.iter().map(|(_, w)| w).sum()
    }

    pub fn dim(&self) -> usize {
        1usize << self.width()
    }

    pub fn registers(&self) -> &[(String, usize)] {
        &self.regs
    }

    pub fn contains(&self, name: &str) -> bool {
        self.regs.iter().any(|(n, _)| n == name)
    }

    /// `(first qubit, width)` of a register.
    pub fn span(&self, name: &str) -> Result<(usize, usize)> {
        let mut start = 0;
        for (n, w) in &self.regs {
            if n == name {
                return Ok((start, *w));
            }
            start += w;
        }
        Err(Error::UnknownRegister(name.to_string()))
    }

    /// Qubit indices of the listed registers, in the listed order.
    pub fn qubits(&self, names: &[&str]) -> Result<Vec<usize>> {
        let mut out = Vec::new();
        for name in names {
            let (s, w) = self.span(name)?;
            out.extend(s..s + w);
        }
        Ok(out)
    }

    pub fn register_width(&self, name: &str) -> Result<usize> {
        self.span(name).map(|(_, w)| w)
    }

    /// Concatenate two layouts; names must be disjoint.
    pub fn concat(&self, other: &RegisterLayout) -> Result<RegisterLayout> {
        let mut out = self.clone();
        for (n, w) in &other.regs {
            out.push(n.clone(), *w)?;
        }
        Ok(out)
    }

    /// The layout with the named registers removed.
    pub fn without(&self, names: &[&str]) -> Result<RegisterLayout> {
        for n in names {
            self.span(n)?;
        }
        Ok(RegisterLayout { regs: self.regs.iter().filter(|(n, _)| !names.contains(&n.as_str())).cloned().collect() })
    }
}
