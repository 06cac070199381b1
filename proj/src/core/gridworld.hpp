#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "core/interaction.hpp"

namespace bcr {

// Compass moves; row 0 is the top line of the ASCII map, so North decreases
// the row index.
enum GridAction : int { kNorth = 0, kEast = 1, kSouth = 2, kWest = 3 };
inline constexpr int kGridActions = 4;

// Rectangular grid with walls, one goal cell and one-way membrane edges.
//
// ASCII format, one glyph per cell:
//   '#'  wall
//   '.'  free cell
//   'G'  goal cell (exactly one)
//   '^' 'v' '<' '>'  free cell whose exit North/South/West/East is blocked by
//        a membrane; traversing the edge the other way (into the cell) is
//        allowed and pays the membrane reward.
// A glyph can only carry one direction, so extra membrane edges can be listed
// after the grid, one per line:  membrane COL ROW DIR   with DIR in {N,E,S,W}
// and 0-based coordinates. Blank lines between grid and extension are allowed.
struct GridMap {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> passable;      // width*height, row-major
    std::vector<std::uint8_t> blocked_exit;  // bitmask per cell, bit = GridAction
    int goal = -1;                           // cell index

    double slip = 0.9;          // probability the intended move is attempted
    double reward_default = 0.0;
    double reward_membrane = 1.0;
    double reward_goal = 2.5;

    int cells() const { return width * height; }
    int cell_index(int col, int row) const { return row * width + col; }
    int col_of(int cell) const { return cell % width; }
    int row_of(int cell) const { return cell / width; }
    bool in_bounds(int col, int row) const {
        return col >= 0 && col < width && row >= 0 && row < height;
    }
    bool is_passable(int cell) const { return passable[static_cast<std::size_t>(cell)] != 0; }
    // Neighbour cell in a direction, or -1 for out of bounds.
    int neighbour(int cell, int dir) const;
    bool exit_blocked(int cell, int dir) const {
        return (blocked_exit[static_cast<std::size_t>(cell)] >> dir) & 1u;
    }

    std::vector<int> passable_cells() const;
    std::vector<int> reset_cells() const;  // passable, excluding the goal

    bool operator==(const GridMap&) const = default;
};

GridMap parse_grid_map(const std::string& text);
std::string serialize_grid_map(const GridMap& map);

// The bundled 7x7 membrane map (two one-way "inverted cups" guarding the
// approach to a top-row goal).
const std::string& default_membrane_map_text();

// One movement from a passable non-goal cell: with probability `slip` the
// intended direction is attempted, otherwise a uniformly drawn passable
// neighbour is attempted; an attempt across a wall or a blocked membrane
// direction leaves the agent in place. Reward: goal > membrane > default.
struct GridTransition {
    int next = 0;
    double reward = 0.0;
    bool membrane_traversed = false;
};

GridTransition grid_transition(const GridMap& map, int cell, int action, Rng& rng);

// Stateful simulator adding the goal-reset rule: the step after reaching the
// goal ignores the action and redraws the position uniformly over passable
// non-goal cells (default reward). Start position is drawn the same way.
class GridworldSim {
public:
    GridworldSim(const GridMap& map, Rng& rng);

    int state() const { return state_; }
    GridTransition step(int action, Rng& rng);

    const GridMap& map() const { return map_; }

private:
    GridMap map_;
    int state_ = 0;
};

// Observation encoding for the generic interaction protocol: the reward level
// is folded into the symbol so the finite-alphabet machinery sees everything,
// while the exact reward rides in the step's side channel.
inline constexpr int kGridRewardClasses = 3;  // default, membrane, goal

int encode_grid_observation(const GridMap& map, int cell, double reward);
int decode_grid_observation_cell(int observation);
double decode_grid_observation_reward(const GridMap& map, int observation);

// Protocol adapter over the same dynamics. The position is recovered from the
// last observation; the initial position is drawn inside the first response,
// so the first action is necessarily uninformed.
Environment make_grid_environment(const GridMap& map);

}  // namespace bcr
