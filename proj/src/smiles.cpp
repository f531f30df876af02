#include "otgnn/smiles.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <map>

#include "otgnn/errors.hpp"

namespace otgnn {

namespace {

const std::array<std::string, 10> kSupported = {"B", "C", "N",  "O",  "P",
                                                "S", "F", "Cl", "Br", "I"};

int element_index(const std::string& symbol) {
    for (std::size_t k = 0; k < kSupported.size(); ++k)
        if (symbol == kSupported[k]) return static_cast<int>(k);
    return 10;  // other
}

int default_valence(const std::string& symbol) {
    static const std::map<std::string, int> valence = {
        {"B", 3}, {"C", 4}, {"N", 3}, {"O", 2}, {"P", 3},
        {"S", 2}, {"F", 1}, {"Cl", 1}, {"Br", 1}, {"I", 1}};
    const auto it = valence.find(symbol);
    return it == valence.end() ? 0 : it->second;
}

struct RingOpen {
    int atom = -1;
    int order = -1;  // −1: unspecified
    std::size_t offset = 0;
};

class Parser {
public:
    explicit Parser(const std::string& s) : s_(s) {}

    Molecule run() {
        if (s_.empty()) throw ParseError("empty SMILES string", 0);
        while (pos_ < s_.size()) step();
        if (!branch_stack_.empty())
            throw ParseError("unclosed branch", s_.size());
        if (!rings_.empty())
            throw ParseError("unmatched ring-closure index " + std::to_string(rings_.begin()->first),
                             s_.size());
        if (pending_bond_ >= 0)
            throw ParseError("bond to nonexistent atom", pending_offset_);
        if (mol_.atoms.empty()) throw ParseError("no atoms", 0);
        return std::move(mol_);
    }

private:
    void step() {
        const char c = s_[pos_];
        switch (c) {
            case '-': case '=': case '#': case ':':
            case '/': case '\\':
                set_pending_bond(c);
                ++pos_;
                return;
            case '(': {
                if (prev_atom_ < 0) throw ParseError("branch start without prior atom", pos_);
                if (pending_bond_ >= 0) throw ParseError("bond before branch start", pos_);
                branch_stack_.push_back(prev_atom_);
                ++pos_;
                return;
            }
            case ')': {
                if (branch_stack_.empty()) throw ParseError("unbalanced parenthesis", pos_);
                if (pending_bond_ >= 0) throw ParseError("bond to nonexistent atom", pending_offset_);
                prev_atom_ = branch_stack_.back();
                branch_stack_.pop_back();
                ++pos_;
                return;
            }
            case '.': {
                if (pending_bond_ >= 0) throw ParseError("bond across components", pending_offset_);
                prev_atom_ = -1;
                ++pos_;
                return;
            }
            case '%': {
                if (pos_ + 2 >= s_.size() || !std::isdigit(static_cast<unsigned char>(s_[pos_ + 1])) ||
                    !std::isdigit(static_cast<unsigned char>(s_[pos_ + 2])))
                    throw ParseError("malformed %nn ring closure", pos_);
                const int index = (s_[pos_ + 1] - '0') * 10 + (s_[pos_ + 2] - '0');
                ring_closure(index, pos_);
                pos_ += 3;
                return;
            }
            default:
                break;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            ring_closure(c - '0', pos_);
            ++pos_;
            return;
        }
        if (c == '[') {
            parse_bracket_atom();
            return;
        }
        parse_plain_atom();
    }

    void set_pending_bond(char c) {
        if (pending_bond_ >= 0) throw ParseError("two consecutive bond symbols", pos_);
        switch (c) {
            case '-': case '/': case '\\':
                pending_bond_ = static_cast<int>(BondOrder::Single);
                break;
            case '=':
                pending_bond_ = static_cast<int>(BondOrder::Double);
                break;
            case '#':
                pending_bond_ = static_cast<int>(BondOrder::Triple);
                break;
            case ':':
                pending_bond_ = static_cast<int>(BondOrder::Aromatic);
                break;
        }
        pending_offset_ = pos_;
    }

    int take_pending_bond() {
        const int b = pending_bond_;
        pending_bond_ = -1;
        return b;
    }

    void add_bond(int a, int b, int order, std::size_t offset) {
        if (a == b) throw ParseError("bond endpoints must be distinct", offset);
        for (const Bond& bond : mol_.bonds)
            if ((bond.a == a && bond.b == b) || (bond.a == b && bond.b == a))
                throw ParseError("duplicate bond between atoms", offset);
        Bond bond;
        bond.a = a;
        bond.b = b;
        if (order >= 0)
            bond.order = static_cast<BondOrder>(order);
        else if (mol_.atoms[static_cast<std::size_t>(a)].aromatic &&
                 mol_.atoms[static_cast<std::size_t>(b)].aromatic)
            bond.order = BondOrder::Aromatic;
        else
            bond.order = BondOrder::Single;
        mol_.bonds.push_back(bond);
    }

    void ring_closure(int index, std::size_t offset) {
        if (prev_atom_ < 0) throw ParseError("ring closure before any atom", offset);
        const int bond = take_pending_bond();
        const auto it = rings_.find(index);
        if (it == rings_.end()) {
            rings_[index] = RingOpen{prev_atom_, bond, offset};
            return;
        }
        const RingOpen open = it->second;
        rings_.erase(it);
        int order = -1;
        if (open.order >= 0 && bond >= 0 && open.order != bond)
            throw ParseError("conflicting ring-closure bond orders", offset);
        if (open.order >= 0) order = open.order;
        if (bond >= 0) order = bond;
        add_bond(open.atom, prev_atom_, order, offset);
    }

    void attach(int atom_index, std::size_t offset) {
        if (prev_atom_ >= 0) add_bond(prev_atom_, atom_index, take_pending_bond(), offset);
        else if (pending_bond_ >= 0)
            throw ParseError("bond to nonexistent atom", pending_offset_);
        prev_atom_ = atom_index;
    }

    void parse_plain_atom() {
        const std::size_t start = pos_;
        const char c = s_[pos_];
        Atom atom;
        if (c == '*') {
            atom.element = "*";
            ++pos_;
        } else if (std::isupper(static_cast<unsigned char>(c))) {
            // Two-letter organic-subset symbols first.
            if (pos_ + 1 < s_.size()) {
                const std::string two = s_.substr(pos_, 2);
                if (two == "Cl" || two == "Br") {
                    atom.element = two;
                    pos_ += 2;
                }
            }
            if (atom.element.empty()) {
                const std::string one(1, c);
                if (element_index(one) == 10)
                    throw ParseError("unknown atom token '" + one + "'", start);
                atom.element = one;
                ++pos_;
            }
        } else if (c == 'b' || c == 'c' || c == 'n' || c == 'o' || c == 'p' || c == 's') {
            atom.element = std::string(1, static_cast<char>(std::toupper(c)));
            atom.aromatic = true;
            ++pos_;
        } else {
            throw ParseError(std::string("unknown atom token '") + c + "'", start);
        }
        mol_.atoms.push_back(atom);
        attach(static_cast<int>(mol_.atoms.size()) - 1, start);
    }

    void parse_bracket_atom() {
        const std::size_t start = pos_;
        ++pos_;  // '['
        Atom atom;
        atom.explicit_h = 0;  // bracket atoms carry an explicit hydrogen count

        while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_])))
            ++pos_;  // isotope, parsed and discarded

        if (pos_ >= s_.size()) throw ParseError("unterminated bracket atom", start);
        const char c = s_[pos_];
        if (std::isupper(static_cast<unsigned char>(c))) {
            atom.element = std::string(1, c);
            ++pos_;
            if (pos_ < s_.size() && std::islower(static_cast<unsigned char>(s_[pos_])) &&
                s_[pos_] != 'c' && s_[pos_] != 'h') {
                // Second letter of a two-letter symbol; 'c'/'h' are never part
                // of one in this subset (avoids eating chirality/H-count).
                atom.element += s_[pos_];
                ++pos_;
            } else if (pos_ < s_.size() && s_[pos_] == 'l' && atom.element == "C") {
                atom.element = "Cl";
                ++pos_;
            }
        } else if (std::islower(static_cast<unsigned char>(c))) {
            if (c == 's' && pos_ + 1 < s_.size() && s_[pos_ + 1] == 'e') {
                atom.element = "Se";
                pos_ += 2;
            } else if (c == 'a' && pos_ + 1 < s_.size() && s_[pos_ + 1] == 's') {
                atom.element = "As";
                pos_ += 2;
            } else if (c == 'b' || c == 'c' || c == 'n' || c == 'o' || c == 'p' || c == 's') {
                atom.element = std::string(1, static_cast<char>(std::toupper(c)));
                ++pos_;
            } else {
                throw ParseError(std::string("unknown atom token '") + c + "'", pos_);
            }
            atom.aromatic = true;
        } else if (c == '*') {
            atom.element = "*";
            ++pos_;
        } else {
            throw ParseError("unknown atom token in brackets", pos_);
        }

        while (pos_ < s_.size() && s_[pos_] == '@') ++pos_;  // chirality, ignored

        if (pos_ < s_.size() && s_[pos_] == 'H') {
            ++pos_;
            int count = 1;
            if (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
                count = 0;
                while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_])))
                    count = count * 10 + (s_[pos_++] - '0');
            }
            atom.explicit_h = count;
        }

        if (pos_ < s_.size() && (s_[pos_] == '+' || s_[pos_] == '-')) {
            const char sign_char = s_[pos_];
            const int sign = sign_char == '+' ? 1 : -1;
            int magnitude = 0;
            while (pos_ < s_.size() && s_[pos_] == sign_char) {
                ++magnitude;
                ++pos_;
            }
            if (magnitude == 1 && pos_ < s_.size() &&
                std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
                magnitude = 0;
                while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_])))
                    magnitude = magnitude * 10 + (s_[pos_++] - '0');
            }
            atom.charge = sign * magnitude;
            if (atom.charge < -4 || atom.charge > 4)
                throw ParseError("charge out of range [-4,4]", start);
        }

        if (pos_ < s_.size() && s_[pos_] == ':') {
            ++pos_;  // atom-map class, discarded
            while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
        }

        if (pos_ >= s_.size() || s_[pos_] != ']')
            throw ParseError("unterminated bracket atom", start);
        ++pos_;

        mol_.atoms.push_back(atom);
        attach(static_cast<int>(mol_.atoms.size()) - 1, start);
    }

    const std::string& s_;
    std::size_t pos_ = 0;
    Molecule mol_;
    int prev_atom_ = -1;
    int pending_bond_ = -1;
    std::size_t pending_offset_ = 0;
    std::vector<int> branch_stack_;
    std::map<int, RingOpen> rings_;
};

// Bridge detection by iterative DFS low-link; an edge is in a ring iff it is
// not a bridge.
std::vector<bool> ring_bonds(const Molecule& mol) {
    const int n = static_cast<int>(mol.atoms.size());
    const int nb = static_cast<int>(mol.bonds.size());
    std::vector<std::vector<std::pair<int, int>>> adj(static_cast<std::size_t>(n));
    for (int k = 0; k < nb; ++k) {
        adj[static_cast<std::size_t>(mol.bonds[static_cast<std::size_t>(k)].a)].push_back(
            {mol.bonds[static_cast<std::size_t>(k)].b, k});
        adj[static_cast<std::size_t>(mol.bonds[static_cast<std::size_t>(k)].b)].push_back(
            {mol.bonds[static_cast<std::size_t>(k)].a, k});
    }
    std::vector<int> disc(static_cast<std::size_t>(n), -1), low(static_cast<std::size_t>(n), 0);
    std::vector<bool> bridge(static_cast<std::size_t>(nb), false);
    int timer = 0;

    struct Frame {
        int node, parent_edge;
        std::size_t next = 0;
    };
    for (int root = 0; root < n; ++root) {
        if (disc[static_cast<std::size_t>(root)] >= 0) continue;
        std::vector<Frame> stack{{root, -1}};
        disc[static_cast<std::size_t>(root)] = low[static_cast<std::size_t>(root)] = timer++;
        while (!stack.empty()) {
            Frame& f = stack.back();
            const auto& edges = adj[static_cast<std::size_t>(f.node)];
            if (f.next < edges.size()) {
                const auto [to, edge_id] = edges[f.next++];
                if (edge_id == f.parent_edge) continue;
                if (disc[static_cast<std::size_t>(to)] >= 0) {
                    low[static_cast<std::size_t>(f.node)] =
                        std::min(low[static_cast<std::size_t>(f.node)],
                                 disc[static_cast<std::size_t>(to)]);
                } else {
                    disc[static_cast<std::size_t>(to)] = low[static_cast<std::size_t>(to)] = timer++;
                    stack.push_back({to, edge_id});
                }
            } else {
                stack.pop_back();
                if (!stack.empty()) {
                    Frame& parent = stack.back();
                    low[static_cast<std::size_t>(parent.node)] =
                        std::min(low[static_cast<std::size_t>(parent.node)],
                                 low[static_cast<std::size_t>(f.node)]);
                    if (low[static_cast<std::size_t>(f.node)] >
                        disc[static_cast<std::size_t>(parent.node)])
                        bridge[static_cast<std::size_t>(f.parent_edge)] = true;
                }
            }
        }
    }
    std::vector<bool> in_ring(static_cast<std::size_t>(nb));
    for (int k = 0; k < nb; ++k) in_ring[static_cast<std::size_t>(k)] = !bridge[static_cast<std::size_t>(k)];
    return in_ring;
}

double bond_order_value(BondOrder order) {
    switch (order) {
        case BondOrder::Single: return 1.0;
        case BondOrder::Double: return 2.0;
        case BondOrder::Triple: return 3.0;
        case BondOrder::Aromatic: return 1.5;
    }
    return 1.0;
}

}  // namespace

Molecule parse_smiles(const std::string& s) { return Parser(s).run(); }

Graph featurize(const Molecule& mol) {
    const int n = static_cast<int>(mol.atoms.size());
    const int nb = static_cast<int>(mol.bonds.size());

    std::vector<int> degree(static_cast<std::size_t>(n), 0);
    std::vector<double> order_sum(static_cast<std::size_t>(n), 0.0);
    for (const Bond& b : mol.bonds) {
        ++degree[static_cast<std::size_t>(b.a)];
        ++degree[static_cast<std::size_t>(b.b)];
        order_sum[static_cast<std::size_t>(b.a)] += bond_order_value(b.order);
        order_sum[static_cast<std::size_t>(b.b)] += bond_order_value(b.order);
    }

    Graph g;
    g.node_features = Tensor(n, kNodeFeatureDim);
    for (int i = 0; i < n; ++i) {
        const Atom& atom = mol.atoms[static_cast<std::size_t>(i)];
        int h = atom.explicit_h;
        if (h < 0) {
            const int slots = default_valence(atom.element) -
                              static_cast<int>(order_sum[static_cast<std::size_t>(i)]) -
                              std::abs(atom.charge);
            h = std::max(0, slots);
        }
        double* f = g.node_features.row_ptr(i);
        f[element_index(atom.element)] = 1.0;
        f[11 + std::min(degree[static_cast<std::size_t>(i)], 5)] = 1.0;
        f[11 + 6 + std::clamp(atom.charge, -2, 2) + 2] = 1.0;
        if (atom.aromatic) f[11 + 6 + 5] = 1.0;
        f[11 + 6 + 5 + 1 + std::min(h, 4)] = 1.0;
    }

    const std::vector<bool> in_ring = ring_bonds(mol);
    g.edge_features = Tensor(2 * nb, kEdgeFeatureDim);
    g.edges.reserve(static_cast<std::size_t>(2 * nb));
    for (int k = 0; k < nb; ++k) {
        const Bond& b = mol.bonds[static_cast<std::size_t>(k)];
        for (const auto [s, d] : {std::pair{b.a, b.b}, std::pair{b.b, b.a}}) {
            const int e = static_cast<int>(g.edges.size());
            g.edges.push_back(DirectedEdge{s, d});
            double* f = g.edge_features.row_ptr(e);
            f[static_cast<int>(b.order)] = 1.0;
            if (in_ring[static_cast<std::size_t>(k)]) f[4] = 1.0;
        }
    }

    g.finalize();
    return g;
}

}  // namespace otgnn
