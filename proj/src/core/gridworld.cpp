#include "core/gridworld.hpp"

#include <bit>
#include <cmath>
#include <sstream>

namespace bcr {

namespace {

constexpr std::array<int, 4> kDCol = {0, 1, 0, -1};   // N E S W
constexpr std::array<int, 4> kDRow = {-1, 0, 1, 0};
constexpr std::array<char, 4> kDirGlyph = {'^', '>', 'v', '<'};
constexpr std::array<char, 4> kDirLetter = {'N', 'E', 'S', 'W'};

int opposite(int dir) { return (dir + 2) % 4; }

int dir_from_letter(char c) {
    for (int d = 0; d < kGridActions; ++d) {
        if (kDirLetter[static_cast<std::size_t>(d)] == c) return d;
    }
    return -1;
}

int draw_uniform_cell(const std::vector<int>& cells, Rng& rng) {
    std::uniform_int_distribution<std::size_t> pick(0, cells.size() - 1);
    return cells[pick(rng)];
}

void add_membrane(GridMap& map, int col, int row, int dir, int line, int column) {
    const int cell = map.cell_index(col, row);
    if (!map.is_passable(cell)) {
        throw MapParseError("membrane attached to a wall cell", line, column);
    }
    const int nb = map.neighbour(cell, dir);
    if (nb < 0 || !map.is_passable(nb)) {
        throw MapParseError("membrane points into a wall or off the map", line, column);
    }
    map.blocked_exit[static_cast<std::size_t>(cell)] |=
        static_cast<std::uint8_t>(1u << dir);
}

}  // namespace

int GridMap::neighbour(int cell, int dir) const {
    const int col = col_of(cell) + kDCol[static_cast<std::size_t>(dir)];
    const int row = row_of(cell) + kDRow[static_cast<std::size_t>(dir)];
    if (!in_bounds(col, row)) return -1;
    return cell_index(col, row);
}

std::vector<int> GridMap::passable_cells() const {
    std::vector<int> out;
    for (int c = 0; c < cells(); ++c) {
        if (is_passable(c)) out.push_back(c);
    }
    return out;
}

std::vector<int> GridMap::reset_cells() const {
    std::vector<int> out;
    for (int c = 0; c < cells(); ++c) {
        if (is_passable(c) && c != goal) out.push_back(c);
    }
    return out;
}

GridMap parse_grid_map(const std::string& text) {
    std::vector<std::string> lines;
    {
        std::string cur;
        for (char c : text) {
            if (c == '\n') {
                lines.push_back(cur);
                cur.clear();
            } else if (c != '\r') {
                cur += c;
            }
        }
        if (!cur.empty()) lines.push_back(cur);
    }

    // Grid rows are the leading non-empty lines made only of cell glyphs.
    std::size_t n_grid = 0;
    auto is_grid_line = [](const std::string& s) {
        if (s.empty()) return false;
        for (char c : s) {
            if (std::string("#.G^v<>").find(c) == std::string::npos) return false;
        }
        return true;
    };
    while (n_grid < lines.size() && is_grid_line(lines[n_grid])) ++n_grid;
    if (n_grid == 0) {
        throw MapParseError("no grid rows found", 1, 1);
    }

    GridMap map;
    map.height = static_cast<int>(n_grid);
    map.width = static_cast<int>(lines[0].size());
    map.passable.assign(static_cast<std::size_t>(map.cells()), 0);
    map.blocked_exit.assign(static_cast<std::size_t>(map.cells()), 0);

    std::vector<std::pair<int, int>> membrane_glyphs;  // cell, dir
    for (int row = 0; row < map.height; ++row) {
        const std::string& line = lines[static_cast<std::size_t>(row)];
        if (static_cast<int>(line.size()) != map.width) {
            throw MapParseError("grid row has inconsistent width", row + 1,
                                static_cast<int>(line.size()) + 1);
        }
        for (int col = 0; col < map.width; ++col) {
            const char g = line[static_cast<std::size_t>(col)];
            const int cell = map.cell_index(col, row);
            switch (g) {
                case '#':
                    break;
                case '.':
                    map.passable[static_cast<std::size_t>(cell)] = 1;
                    break;
                case 'G':
                    if (map.goal >= 0) {
                        throw MapParseError("second goal cell", row + 1, col + 1);
                    }
                    map.passable[static_cast<std::size_t>(cell)] = 1;
                    map.goal = cell;
                    break;
                default: {
                    int dir = -1;
                    for (int d = 0; d < kGridActions; ++d) {
                        if (kDirGlyph[static_cast<std::size_t>(d)] == g) dir = d;
                    }
                    if (dir < 0) {
                        throw MapParseError(std::string("unknown glyph '") + g + "'",
                                            row + 1, col + 1);
                    }
                    map.passable[static_cast<std::size_t>(cell)] = 1;
                    membrane_glyphs.emplace_back(cell, dir);
                    break;
                }
            }
        }
    }
    if (map.goal < 0) {
        throw MapParseError("map has no goal cell", 0, 0);
    }
    for (auto [cell, dir] : membrane_glyphs) {
        add_membrane(map, map.col_of(cell), map.row_of(cell), dir,
                     map.row_of(cell) + 1, map.col_of(cell) + 1);
    }

    // Extension section: blank lines, then "membrane COL ROW DIR" entries.
    for (std::size_t li = n_grid; li < lines.size(); ++li) {
        const std::string& line = lines[li];
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        std::istringstream ss(line);
        std::string word;
        ss >> word;
        if (word != "membrane") {
            throw MapParseError("expected 'membrane COL ROW DIR'",
                                static_cast<int>(li) + 1, 1);
        }
        int col = -1, row = -1;
        std::string dir_word;
        if (!(ss >> col >> row >> dir_word) || dir_word.size() != 1) {
            throw MapParseError("malformed membrane line", static_cast<int>(li) + 1, 1);
        }
        const int dir = dir_from_letter(dir_word[0]);
        if (dir < 0) {
            throw MapParseError("membrane direction must be N, E, S or W",
                                static_cast<int>(li) + 1, 1);
        }
        if (!map.in_bounds(col, row)) {
            throw MapParseError("membrane coordinates outside the grid",
                                static_cast<int>(li) + 1, 1);
        }
        add_membrane(map, col, row, dir, static_cast<int>(li) + 1, 1);
    }
    return map;
}

std::string serialize_grid_map(const GridMap& map) {
    std::string out;
    std::vector<std::string> extension;
    for (int row = 0; row < map.height; ++row) {
        for (int col = 0; col < map.width; ++col) {
            const int cell = map.cell_index(col, row);
            const std::uint8_t mask = map.blocked_exit[static_cast<std::size_t>(cell)];
            char g = '.';
            if (!map.is_passable(cell)) {
                g = '#';
            } else if (cell == map.goal) {
                g = 'G';
            } else if (std::popcount(mask) == 1) {
                g = kDirGlyph[static_cast<std::size_t>(std::countr_zero(mask))];
            }
            // Goal cells and multi-edge cells keep their plain glyph and list
            // every edge in the extension section instead.
            if (map.is_passable(cell) && (g == '.' || g == 'G') && mask != 0) {
                for (int d = 0; d < kGridActions; ++d) {
                    if ((mask >> d) & 1u) {
                        extension.push_back("membrane " + std::to_string(col) + ' ' +
                                            std::to_string(row) + ' ' +
                                            kDirLetter[static_cast<std::size_t>(d)]);
                    }
                }
            }
            out += g;
        }
        out += '\n';
    }
    if (!extension.empty()) {
        out += '\n';
        for (const std::string& line : extension) {
            out += line;
            out += '\n';
        }
    }
    return out;
}

GridTransition grid_transition(const GridMap& map, int cell, int action, Rng& rng) {
    if (cell < 0 || cell >= map.cells() || !map.is_passable(cell)) {
        throw InvalidArgument("grid_transition: source cell not passable");
    }
    if (action < 0 || action >= kGridActions) {
        throw InvalidArgument("grid_transition: action out of range");
    }
    int dir = action;
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    if (unit(rng) >= map.slip) {
        // Slip: pick a passable neighbour uniformly and attempt to move there.
        std::array<int, 4> dirs{};
        int n = 0;
        for (int d = 0; d < kGridActions; ++d) {
            const int nb = map.neighbour(cell, d);
            if (nb >= 0 && map.is_passable(nb)) dirs[static_cast<std::size_t>(n++)] = d;
        }
        if (n == 0) {
            return GridTransition{cell, map.reward_default, false};
        }
        std::uniform_int_distribution<int> pick(0, n - 1);
        dir = dirs[static_cast<std::size_t>(pick(rng))];
    }

    const int nb = map.neighbour(cell, dir);
    if (nb < 0 || !map.is_passable(nb) || map.exit_blocked(cell, dir)) {
        return GridTransition{cell, map.reward_default, false};
    }
    GridTransition tr;
    tr.next = nb;
    // The edge is a membrane when the reverse exit is blocked; crossing it in
    // this (allowed) direction pays the membrane reward.
    tr.membrane_traversed = map.exit_blocked(nb, opposite(dir));
    if (tr.next == map.goal) {
        tr.reward = map.reward_goal;
    } else if (tr.membrane_traversed) {
        tr.reward = map.reward_membrane;
    } else {
        tr.reward = map.reward_default;
    }
    return tr;
}

GridworldSim::GridworldSim(const GridMap& map, Rng& rng) : map_(map) {
    const std::vector<int> cells = map_.reset_cells();
    if (cells.empty()) {
        throw InvalidArgument("grid map has no passable non-goal cell to start from");
    }
    state_ = draw_uniform_cell(cells, rng);
}

GridTransition GridworldSim::step(int action, Rng& rng) {
    if (action < 0 || action >= kGridActions) {
        throw InvalidArgument("gridworld action out of range");
    }
    if (state_ == map_.goal) {
        // Reset step: the action is ignored, the position is redrawn.
        state_ = draw_uniform_cell(map_.reset_cells(), rng);
        return GridTransition{state_, map_.reward_default, false};
    }
    const GridTransition tr = grid_transition(map_, state_, action, rng);
    state_ = tr.next;
    return tr;
}

int encode_grid_observation(const GridMap& map, int cell, double reward) {
    int cls = 0;
    if (reward == map.reward_goal) {
        cls = 2;
    } else if (reward == map.reward_membrane) {
        cls = 1;
    }
    return cell * kGridRewardClasses + cls;
}

int decode_grid_observation_cell(int observation) {
    return observation / kGridRewardClasses;
}

double decode_grid_observation_reward(const GridMap& map, int observation) {
    switch (observation % kGridRewardClasses) {
        case 2: return map.reward_goal;
        case 1: return map.reward_membrane;
        default: return map.reward_default;
    }
}

Environment make_grid_environment(const GridMap& map) {
    Environment env;
    env.actions = Alphabet{kGridActions};
    env.observations = Alphabet{map.cells() * kGridRewardClasses};
    env.respond = [map](const InteractionHistory& history, int action, Rng& rng) {
        const int pos = history.empty()
                            ? draw_uniform_cell(map.reset_cells(), rng)
                            : decode_grid_observation_cell(history.back().observation);
        if (pos == map.goal) {
            const int z = draw_uniform_cell(map.reset_cells(), rng);
            return Step{0, encode_grid_observation(map, z, map.reward_default),
                        map.reward_default};
        }
        const GridTransition tr = grid_transition(map, pos, action, rng);
        return Step{0, encode_grid_observation(map, tr.next, tr.reward), tr.reward};
    };
    return env;
}

const std::string& default_membrane_map_text() {
    static const std::string text =
        ".....G.\n"
        ".......\n"
        "..^....\n"
        ".......\n"
        "....^..\n"
        ".......\n"
        ".......\n"
        "\n"
        "membrane 2 2 W\n"
        "membrane 2 2 E\n"
        "membrane 4 4 W\n"
        "membrane 4 4 E\n";
    return text;
}

}  // namespace bcr
