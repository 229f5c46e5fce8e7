//! Grid geometry shared by the grid-world environments: ASCII layouts,
//! headings, and all-pairs shortest-path distances.
//!
//! Layout alphabet: `#` wall, `.` free cell; any other character marks a free
//! cell carrying that marker (its meaning is environment specific).

use crate::error::{Error, Result};

pub type Cell = u16;

pub const UNREACHABLE: u16 = u16::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Dir {
    North = 0,
    East = 1,
    South = 2,
    West = 3,
}

impl Dir {
    pub const ALL: [Dir; 4] = [Dir::North, Dir::East, Dir::South, Dir::West];

    pub fn from_index(i: usize) -> Dir {
        Dir::ALL[i % 4]
    }

    pub fn left(self) -> Dir {
        Dir::from_index(self as usize + 3)
    }

    pub fn right(self) -> Dir {
        Dir::from_index(self as usize + 1)
    }

    pub fn reverse(self) -> Dir {
        Dir::from_index(self as usize + 2)
    }

    pub fn delta(self) -> (i32, i32) {
        match self {
            Dir::North => (0, -1),
            Dir::East => (1, 0),
            Dir::South => (0, 1),
            Dir::West => (-1, 0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Grid {
    width: usize,
    height: usize,
    walls: Vec<bool>,
}

impl Grid {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn n_cells(&self) -> usize {
        self.width * self.height
    }

    pub fn cell(&self, x: usize, y: usize) -> Cell {
        (y * self.width + x) as Cell
    }

    pub fn coords(&self, cell: Cell) -> (usize, usize) {
        let c = cell as usize;
        (c % self.width, c / self.width)
    }

    pub fn is_wall(&self, cell: Cell) -> bool {
        self.walls[cell as usize]
    }

    /// Wall test for possibly off-grid coordinates; outside counts as wall.
    pub fn is_wall_at(&self, x: i32, y: i32) -> bool {
        match self.cell_at(x, y) {
            Some(c) => self.walls[c as usize],
            None => true,
        }
    }

    pub fn cell_at(&self, x: i32, y: i32) -> Option<Cell> {
        if x < 0 || y < 0 || x as usize >= self.width || y as usize >= self.height {
            None
        } else {
            Some(self.cell(x as usize, y as usize))
        }
    }

    /// Neighbouring free cell in direction `dir`, if any.
    pub fn neighbor(&self, cell: Cell, dir: Dir) -> Option<Cell> {
        let (x, y) = self.coords(cell);
        let (dx, dy) = dir.delta();
        self.cell_at(x as i32 + dx, y as i32 + dy).filter(|&c| !self.walls[c as usize])
    }

    pub fn free_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.n_cells() as Cell).filter(|&c| !self.walls[c as usize])
    }

    pub fn manhattan(&self, a: Cell, b: Cell) -> u32 {
        let (ax, ay) = self.coords(a);
        let (bx, by) = self.coords(b);
        (ax.abs_diff(bx) + ay.abs_diff(by)) as u32
    }

    pub fn sq_euclid(&self, a: Cell, b: Cell) -> u32 {
        let (ax, ay) = self.coords(a);
        let (bx, by) = self.coords(b);
        let dx = ax.abs_diff(bx) as u32;
        let dy = ay.abs_diff(by) as u32;
        dx * dx + dy * dy
    }
}

/// Parsed ASCII layout: the wall grid plus marker positions in reading order.
#[derive(Debug, Clone)]
pub struct AsciiLayout {
    pub grid: Grid,
    pub markers: Vec<(char, Cell)>,
}

impl AsciiLayout {
    pub fn parse(text: &str) -> Result<Self> {
        let rows: Vec<&str> = text
            .lines()
            .map(str::trim_end)
            .filter(|l| !l.is_empty() && !l.starts_with(';'))
            .collect();
        if rows.is_empty() {
            return Err(Error::Config("empty layout".into()));
        }
        let width = rows[0].chars().count();
        let mut walls = Vec::with_capacity(width * rows.len());
        let mut markers = Vec::new();
        for (y, row) in rows.iter().enumerate() {
            if row.chars().count() != width {
                return Err(Error::Config(format!(
                    "layout row {y} has {} cells, expected {width}",
                    row.chars().count()
                )));
            }
            for (x, ch) in row.chars().enumerate() {
                let cell = (y * width + x) as Cell;
                match ch {
                    '#' => walls.push(true),
                    '.' => walls.push(false),
                    c if c.is_whitespace() => {
                        return Err(Error::Config(format!("whitespace inside layout at ({x}, {y})")))
                    }
                    c => {
                        walls.push(false);
                        markers.push((c, cell));
                    }
                }
            }
        }
        Ok(Self {
            grid: Grid { width, height: rows.len(), walls },
            markers,
        })
    }

    pub fn cells_marked(&self, marker: char) -> Vec<Cell> {
        self.markers.iter().filter(|(m, _)| *m == marker).map(|&(_, c)| c).collect()
    }
}

/// All-pairs shortest-path lengths over free cells (4-connected BFS).
#[derive(Debug, Clone)]
pub struct DistanceTable {
    n: usize,
    dist: Vec<u16>,
}

impl DistanceTable {
    pub fn new(grid: &Grid) -> Self {
        let n = grid.n_cells();
        let mut dist = vec![UNREACHABLE; n * n];
        let mut queue = std::collections::VecDeque::new();
        for src in grid.free_cells() {
            let row = &mut dist[src as usize * n..(src as usize + 1) * n];
            row[src as usize] = 0;
            queue.clear();
            queue.push_back(src);
            while let Some(c) = queue.pop_front() {
                let d = row[c as usize];
                for dir in Dir::ALL {
                    if let Some(nb) = grid.neighbor(c, dir) {
                        if row[nb as usize] == UNREACHABLE {
                            row[nb as usize] = d + 1;
                            queue.push_back(nb);
                        }
                    }
                }
            }
        }
        Self { n, dist }
    }

    pub fn get(&self, a: Cell, b: Cell) -> u16 {
        self.dist[a as usize * self.n + b as usize]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_bfs() {
        let layout = AsciiLayout::parse("#####\n#A..#\n#.#.#\n#..B#\n#####\n").unwrap();
        let g = &layout.grid;
        assert_eq!((g.width(), g.height()), (5, 5));
        let a = layout.cells_marked('A')[0];
        let b = layout.cells_marked('B')[0];
        let d = DistanceTable::new(g);
        assert_eq!(d.get(a, b), 4);
        assert_eq!(d.get(a, a), 0);
        assert_eq!(d.get(a, g.cell(0, 0)), UNREACHABLE);
        assert_eq!(g.neighbor(a, Dir::North), None);
        assert_eq!(g.neighbor(a, Dir::East), Some(g.cell(2, 1)));
    }

    #[test]
    fn ragged_layout_rejected() {
        assert!(AsciiLayout::parse("###\n##\n").is_err());
        assert!(AsciiLayout::parse("").is_err());
    }

    #[test]
    fn turning() {
        assert_eq!(Dir::North.left(), Dir::West);
        assert_eq!(Dir::West.right(), Dir::North);
        assert_eq!(Dir::East.reverse(), Dir::West);
    }
}
