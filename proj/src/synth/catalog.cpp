#include "dvk/synth/catalog.hpp"

#include <algorithm>

#include "dvk/error.hpp"

namespace dvk::synth {
namespace {

int jitter(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

std::vector<Cell> rect(int row, int col, int height, int width) {
  std::vector<Cell> cells;
  for (int r = row; r < row + height; ++r) {
    for (int c = col; c < col + width; ++c) cells.push_back({r, c});
  }
  return cells;
}

// Outer ring of one role around an interior of another.
void add_ring_body(LocalShape& shape, int height, int width, PrototypeId wall,
                   PrototypeId inner) {
  Part outer{wall, {}};
  Part interior{inner, {}};
  for (const Cell& c : rect(0, 0, height, width)) {
    const bool edge = c.row == 0 || c.col == 0 || c.row == height - 1 || c.col == width - 1;
    (edge ? outer : interior).cells.push_back(c);
  }
  shape.parts.push_back(std::move(outer));
  if (!interior.cells.empty()) shape.parts.push_back(std::move(interior));
}

// Loop handle lying along the right side of a body of the given width.
void add_side_handle(LocalShape& shape, int width, int first_row, int length) {
  Part handle{kHandle, rect(first_row, width, length, 1)};
  shape.handle = handle.cells[static_cast<std::size_t>(length / 2)];
  shape.parts.push_back(std::move(handle));
}

// Straight handle sticking out to the right from column `col`.
void add_stick_handle(LocalShape& shape, int row, int col, int length) {
  Part handle{kHandle, rect(row, col, 1, length)};
  shape.handle = handle.cells[static_cast<std::size_t>(length / 2)];
  shape.parts.push_back(std::move(handle));
}

LocalShape mug(Rng& rng, int base_h, int base_w, PrototypeId wall, PrototypeId inner,
               int handle_len) {
  LocalShape s;
  const int h = base_h + jitter(rng, 0, 1);
  const int w = base_w + jitter(rng, 0, 1);
  add_ring_body(s, h, w, wall, inner);
  add_side_handle(s, w, jitter(rng, 0, h - handle_len), handle_len);
  return s;
}

std::vector<ObjectTemplate> build_catalog() {
  std::vector<ObjectTemplate> c;
  // Intra-class mug family.
  c.push_back({"mug_a", "square mug, two-cell loop handle", [](Rng& rng) {
                 return mug(rng, 4, 4, body_part(0), body_part(1), 2);
               }});
  c.push_back({"mug_b", "wide mug, three-cell loop handle", [](Rng& rng) {
                 return mug(rng, 3, 5, body_part(0), body_part(2), 3);
               }});
  c.push_back({"mug_c", "tall mug, two-cell loop handle", [](Rng& rng) {
                 return mug(rng, 5, 4, body_part(3), body_part(1), 2);
               }});
  c.push_back({"mug_d", "narrow mug, short straight handle", [](Rng& rng) {
                 LocalShape s;
                 const int h = 4;
                 const int w = 3 + jitter(rng, 0, 1);
                 add_ring_body(s, h, w, body_part(3), body_part(2));
                 add_stick_handle(s, jitter(rng, 1, h - 2), w, 2);
                 return s;
               }});

  // Cross-class training objects.
  c.push_back({"mug", "round-walled mug", [](Rng& rng) {
                 return mug(rng, 4, 4, body_part(0), body_part(1), 2);
               }});
  c.push_back({"pan", "disc pan with a long straight handle", [](Rng& rng) {
                 LocalShape s;
                 const int d = 4 + jitter(rng, 0, 1);
                 Part disc{body_part(4), {}};
                 for (const Cell& cell : rect(0, 0, d, d)) {
                   const bool corner = (cell.row == 0 || cell.row == d - 1) &&
                                       (cell.col == 0 || cell.col == d - 1);
                   if (!corner) disc.cells.push_back(cell);
                 }
                 s.parts.push_back(std::move(disc));
                 add_stick_handle(s, d / 2 - jitter(rng, 0, 1) * (d % 2 == 0 ? 1 : 0), d, 3);
                 return s;
               }});
  c.push_back({"screwdriver", "shaft with a tip and an in-line grip", [](Rng& rng) {
                 LocalShape s;
                 const int len = 3 + jitter(rng, 0, 1);
                 s.parts.push_back({body_part(6), {{0, 0}}});
                 s.parts.push_back({body_part(5), rect(0, 1, 1, len)});
                 add_stick_handle(s, 0, len + 1, 3);
                 return s;
               }});

  // Held-out templates.
  c.push_back({"mug_tall", "tall mug with a different interior", [](Rng& rng) {
                 return mug(rng, 6, 4, body_part(0), body_part(8), 3);
               }});
  c.push_back({"kettle", "kettle with spout and loop handle", [](Rng& rng) {
                 LocalShape s;
                 const int h = 4 + jitter(rng, 0, 1);
                 const int w = 4;
                 add_ring_body(s, h, w, body_part(7), body_part(1));
                 // Spout on the left, shifted right so coordinates stay >= 0.
                 for (auto& part : s.parts) {
                   for (auto& cell : part.cells) cell.col += 1;
                 }
                 s.parts.push_back({body_part(5), {{h / 2, 0}}});
                 add_side_handle(s, w + 1, jitter(rng, 0, h - 3), 3);
                 return s;
               }});
  c.push_back({"saucepan", "rimmed pan with a short handle", [](Rng& rng) {
                 LocalShape s;
                 const int d = 4 + jitter(rng, 0, 1);
                 add_ring_body(s, d, d, body_part(4), body_part(8));
                 add_stick_handle(s, jitter(rng, 1, d - 2), d, 2);
                 return s;
               }});
  c.push_back({"basket", "wide basket with a handle over one long side", [](Rng& rng) {
                 LocalShape s;
                 const int h = 3;
                 const int w = 5 + jitter(rng, 0, 1);
                 s.parts.push_back({body_part(8), rect(1, 0, h, w)});
                 const int first = jitter(rng, 0, w - 3);
                 Part handle{kHandle, rect(0, first, 1, 3)};
                 s.handle = handle.cells[1];
                 s.parts.push_back(std::move(handle));
                 return s;
               }});
  c.push_back({"shoe", "elongated shoe with a heel loop", [](Rng& rng) {
                 LocalShape s;
                 const int len = 5 + jitter(rng, 0, 1);
                 s.parts.push_back({body_part(9), rect(0, 0, 2, len)});
                 add_stick_handle(s, jitter(rng, 0, 1), len, 2);
                 return s;
               }});
  c.push_back({"toy", "two-block toy with a loop", [](Rng& rng) {
                 LocalShape s;
                 const int top = 3;
                 s.parts.push_back({body_part(7), rect(0, 0, top, 3)});
                 s.parts.push_back({body_part(9), rect(top, 1, 2, 2 + jitter(rng, 0, 1))});
                 add_side_handle(s, 3, jitter(rng, 0, 1), 2);
                 return s;
               }});
  c.push_back({"brush", "brush head, neck and long grip", [](Rng& rng) {
                 LocalShape s;
                 const int head = 2 + jitter(rng, 0, 1);
                 s.parts.push_back({body_part(6), rect(0, 0, 3, head)});
                 s.parts.push_back({body_part(5), {{1, head}}});
                 add_stick_handle(s, 1, head + 1, 3);
                 return s;
               }});
  c.push_back({"watering_can", "can with a spout and a loop handle", [](Rng& rng) {
                 LocalShape s;
                 const int h = 3 + jitter(rng, 0, 1);
                 s.parts.push_back({body_part(5), rect(1, 0, 1, 2)});
                 s.parts.push_back({body_part(3), rect(0, 2, h, 4)});
                 add_side_handle(s, 6, jitter(rng, 0, h - 2), 2);
                 return s;
               }});
  return c;
}

}  // namespace

const std::vector<ObjectTemplate>& catalog() {
  static const std::vector<ObjectTemplate> templates = build_catalog();
  return templates;
}

const ObjectTemplate& find_template(const std::string& id) {
  for (const auto& t : catalog()) {
    if (t.id == id) return t;
  }
  throw Error(ErrorCode::UnknownClass, "no object class '" + id + "'");
}

std::vector<std::string> intra_objects() { return {"mug_a", "mug_b", "mug_c", "mug_d"}; }

std::vector<std::string> inter_train_objects() { return {"mug", "pan", "screwdriver"}; }

std::vector<std::string> inter_test_objects() {
  return {"mug_tall", "kettle", "saucepan", "basket", "shoe", "toy", "brush", "watering_can"};
}

std::uint64_t stable_hash(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace dvk::synth
