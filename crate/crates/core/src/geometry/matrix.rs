use std::fmt;
use std::str::FromStr;

/// Topological location of a point relative to a geometry.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Location {
    Interior = 0,
    Boundary = 1,
    Exterior = 2,
}

impl Location {
    pub const ALL: [Location; 3] = [Location::Interior, Location::Boundary, Location::Exterior];
}

/// Dimension of a point set; `Empty` sorts lowest.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Dimension {
    Empty,
    Zero,
    One,
    Two,
}

impl Dimension {
    fn symbol(self) -> char {
        match self {
            Dimension::Empty => 'F',
            Dimension::Zero => '0',
            Dimension::One => '1',
            Dimension::Two => '2',
        }
    }
}

/// DE-9IM matrix; rows index the first geometry, columns the second.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct IntersectionMatrix([[Dimension; 3]; 3]);

impl IntersectionMatrix {
    pub fn empty() -> Self {
        IntersectionMatrix([[Dimension::Empty; 3]; 3])
    }

    pub fn get(&self, a: Location, b: Location) -> Dimension {
        self.0[a as usize][b as usize]
    }

    pub fn set(&mut self, a: Location, b: Location, d: Dimension) {
        self.0[a as usize][b as usize] = d;
    }

    /// Raises a cell to at least `d`.
    pub fn raise(&mut self, a: Location, b: Location, d: Dimension) {
        let cell = &mut self.0[a as usize][b as usize];
        if d > *cell {
            *cell = d;
        }
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::empty();
        for a in Location::ALL {
            for b in Location::ALL {
                t.set(b, a, self.get(a, b));
            }
        }
        t
    }

    /// Tests a nine-character mask over `T F * 0 1 2`.
    pub fn matches(&self, mask: &str) -> bool {
        let mask = mask.as_bytes();
        assert_eq!(mask.len(), 9, "DE-9IM mask must have nine cells");
        self.0
            .iter()
            .flatten()
            .zip(mask)
            .all(|(&d, &m)| match m {
                b'*' => true,
                b'T' => d != Dimension::Empty,
                b'F' => d == Dimension::Empty,
                b'0' => d == Dimension::Zero,
                b'1' => d == Dimension::One,
                b'2' => d == Dimension::Two,
                _ => panic!("bad mask symbol {}", m as char),
            })
    }

    pub fn matches_any(&self, masks: &[&str]) -> bool {
        masks.iter().any(|m| self.matches(m))
    }
}

impl fmt::Display for IntersectionMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for d in self.0.iter().flatten() {
            write!(f, "{}", d.symbol())?;
        }
        Ok(())
    }
}

impl fmt::Debug for IntersectionMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "IntersectionMatrix({self})")
    }
}

impl FromStr for IntersectionMatrix {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let cells: Vec<Dimension> = s
            .chars()
            .map(|ch| match ch {
                'F' | 'f' => Ok(Dimension::Empty),
                '0' => Ok(Dimension::Zero),
                '1' => Ok(Dimension::One),
                '2' => Ok(Dimension::Two),
                other => Err(format!("invalid dimension symbol `{other}`")),
            })
            .collect::<Result<_, _>>()?;
        if cells.len() != 9 {
            return Err(format!("expected 9 cells, got {}", cells.len()));
        }
        let mut m = Self::empty();
        for (i, d) in cells.into_iter().enumerate() {
            m.0[i / 3][i % 3] = d;
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_display_round_trip() {
        let m: IntersectionMatrix = "212FF1FF2".parse().unwrap();
        assert_eq!(m.to_string(), "212FF1FF2");
        assert_eq!(m.get(Location::Interior, Location::Boundary), Dimension::One);
        assert_eq!(m.transpose().to_string(), "2FF1FF212");
        assert!("21".parse::<IntersectionMatrix>().is_err());
    }

    #[test]
    fn masks() {
        let m: IntersectionMatrix = "0F1FF0102".parse().unwrap();
        assert!(m.matches("0********"));
        assert!(m.matches("T*T******"));
        assert!(!m.matches("F********"));
    }
}
