#include <ostream>

#include "../text_io.hpp"
#include "appnet/learners.hpp"

namespace appnet {

using detail::format_double;

namespace {

void write_tree(std::ostream& out, const TreeModel& m) {
    out << "type " << (m.target_kind == FeatureKind::numeric ? "regression_tree" : "classification_tree")
        << '\n';
    out << "arity " << m.arity << '\n';
    out << "target " << m.target << '\n';
    out << "classes " << m.classes.size();
    for (const auto& c : m.classes) out << ' ' << c;
    out << '\n';
    out << "nodes " << m.nodes.size() << '\n';
    for (std::size_t i = 0; i < m.nodes.size(); ++i) {
        const TreeNode& n = m.nodes[i];
        out << "node " << i;
        if (n.is_leaf()) {
            out << " leaf " << format_double(n.value);
            if (m.target_kind == FeatureKind::categorical) {
                out << " counts " << n.class_counts.size();
                for (double c : n.class_counts) out << ' ' << format_double(c);
            }
        } else if (n.categorical_split) {
            out << " split_cat " << n.feature << ' ' << n.category << ' ' << n.left << ' ' << n.right << ' '
                << format_double(n.value);
        } else {
            out << " split_num " << n.feature << ' ' << format_double(n.threshold) << ' ' << n.left << ' '
                << n.right << ' ' << format_double(n.value);
        }
        out << '\n';
    }
}

void write_table(std::ostream& out, const DecisionTableModel& m) {
    out << "type decision_table\n";
    out << "arity " << m.arity << '\n';
    out << "target " << m.target << '\n';
    out << "fallback " << format_double(m.fallback) << '\n';
    out << "selected " << m.selected.size() << '\n';
    for (std::size_t i = 0; i < m.selected.size(); ++i) {
        out << "column " << m.selected[i];
        if (m.kinds[i] == FeatureKind::categorical) {
            out << " categorical";
        } else {
            out << " numeric " << m.bin_edges[i].size();
            for (double e : m.bin_edges[i]) out << ' ' << format_double(e);
        }
        out << '\n';
    }
    out << "cells " << m.cells.size() << '\n';
    for (const auto& [key, mean] : m.cells) {
        out << "cell " << format_double(mean);
        for (int k : key) out << ' ' << k;
        out << '\n';
    }
}

int to_int(const std::string& t, std::size_t line) { return static_cast<int>(detail::parse_int(t, line)); }

TreeModel read_tree(detail::LineReader& r, FeatureKind kind) {
    TreeModel m;
    m.target_kind = kind;
    m.arity = detail::parse_index(r.expect("arity", 1)[1], r.line());
    m.target = detail::parse_index(r.expect("target", 1)[1], r.line());
    auto classes = r.expect("classes");
    const std::size_t k = detail::parse_index(classes.at(1), r.line());
    if (classes.size() != k + 2) r.fail("class count does not match listed classes");
    m.classes.assign(classes.begin() + 2, classes.end());
    const std::size_t count = detail::parse_index(r.expect("nodes", 1)[1], r.line());
    if (count == 0) r.fail("tree has no nodes");
    for (std::size_t i = 0; i < count; ++i) {
        auto t = r.expect("node");
        if (t.size() < 4 || detail::parse_index(t[1], r.line()) != i) r.fail("malformed node record");
        TreeNode n;
        const std::size_t line = r.line();
        if (t[2] == "leaf") {
            n.value = detail::parse_double(t[3], line);
            if (kind == FeatureKind::categorical) {
                if (t.size() < 6 || t[4] != "counts") r.fail("classification leaf needs class counts");
                const std::size_t c = detail::parse_index(t[5], line);
                if (t.size() != 6 + c) r.fail("class count mismatch in leaf");
                for (std::size_t j = 0; j < c; ++j) n.class_counts.push_back(detail::parse_double(t[6 + j], line));
            } else if (t.size() != 4) {
                r.fail("malformed leaf record");
            }
        } else if (t[2] == "split_num" || t[2] == "split_cat") {
            if (t.size() != 8) r.fail("malformed split record");
            n.feature = to_int(t[3], line);
            n.categorical_split = t[2] == "split_cat";
            if (n.categorical_split)
                n.category = to_int(t[4], line);
            else
                n.threshold = detail::parse_double(t[4], line);
            n.left = to_int(t[5], line);
            n.right = to_int(t[6], line);
            n.value = detail::parse_double(t[7], line);
            auto in_range = [&](int c) { return c > static_cast<int>(i) && c < static_cast<int>(count); };
            if (!in_range(n.left) || !in_range(n.right)) r.fail("child index out of range");
            if (n.feature < 0 || static_cast<std::size_t>(n.feature) >= m.arity) r.fail("split feature out of range");
        } else {
            r.fail("unknown node kind '" + t[2] + "'");
        }
        m.nodes.push_back(std::move(n));
    }
    return m;
}

DecisionTableModel read_table(detail::LineReader& r) {
    DecisionTableModel m;
    m.arity = detail::parse_index(r.expect("arity", 1)[1], r.line());
    m.target = detail::parse_index(r.expect("target", 1)[1], r.line());
    m.fallback = detail::parse_double(r.expect("fallback", 1)[1], r.line());
    const std::size_t selected = detail::parse_index(r.expect("selected", 1)[1], r.line());
    for (std::size_t i = 0; i < selected; ++i) {
        auto t = r.expect("column");
        if (t.size() < 3) r.fail("malformed column record");
        m.selected.push_back(detail::parse_index(t[1], r.line()));
        if (m.selected.back() >= m.arity) r.fail("column index out of range");
        if (t[2] == "categorical") {
            if (t.size() != 3) r.fail("malformed column record");
            m.kinds.push_back(FeatureKind::categorical);
            m.bin_edges.emplace_back();
        } else if (t[2] == "numeric") {
            if (t.size() < 4) r.fail("malformed column record");
            const std::size_t e = detail::parse_index(t[3], r.line());
            if (t.size() != 4 + e) r.fail("edge count mismatch");
            std::vector<double> edges;
            for (std::size_t j = 0; j < e; ++j) edges.push_back(detail::parse_double(t[4 + j], r.line()));
            m.kinds.push_back(FeatureKind::numeric);
            m.bin_edges.push_back(std::move(edges));
        } else {
            r.fail("unknown column kind '" + t[2] + "'");
        }
    }
    const std::size_t cells = detail::parse_index(r.expect("cells", 1)[1], r.line());
    for (std::size_t i = 0; i < cells; ++i) {
        auto t = r.expect("cell", static_cast<int>(selected) + 1);
        std::vector<int> key;
        for (std::size_t j = 0; j < selected; ++j) key.push_back(to_int(t[2 + j], r.line()));
        m.cells[key] = detail::parse_double(t[1], r.line());
    }
    return m;
}

}  // namespace

void write_model(std::ostream& out, const Model& model) {
    out << "model " << kModelFormatVersion << '\n';
    std::visit(
        [&](const auto& m) {
            if constexpr (std::is_same_v<std::decay_t<decltype(m)>, TreeModel>)
                write_tree(out, m);
            else
                write_table(out, m);
        },
        model);
    out << "end\n";
}

Model read_model(std::istream& in, std::size_t& line) {
    detail::LineReader r(in, line);
    auto header = r.expect("model", 1);
    if (detail::parse_int(header[1], line) != kModelFormatVersion)
        r.fail("unsupported model format version " + header[1]);
    const auto type = r.expect("type", 1)[1];
    Model model;
    if (type == "regression_tree")
        model = read_tree(r, FeatureKind::numeric);
    else if (type == "classification_tree")
        model = read_tree(r, FeatureKind::categorical);
    else if (type == "decision_table")
        model = read_table(r);
    else
        r.fail("unknown model type '" + type + "'");
    r.expect("end", 0);
    return model;
}

}  // namespace appnet
