#include "itrp/report.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "itrp/errors.hpp"

namespace itrp {

std::string format_real(double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    return buf;
}

ReportNode& ReportNode::section(const std::string& key) {
    children_.emplace_back(key);
    return children_.back();
}

void ReportNode::set(const std::string& key, const std::string& value) {
    ReportNode node(key);
    node.value_ = value;
    node.leaf_ = true;
    children_.push_back(std::move(node));
}

void ReportNode::set(const std::string& key, const char* value) {
    set(key, std::string(value));
}

void ReportNode::set(const std::string& key, double value) { set(key, format_real(value)); }

void ReportNode::set(const std::string& key, int value) { set(key, std::to_string(value)); }

void ReportNode::set(const std::string& key, long long value) { set(key, std::to_string(value)); }

void ReportNode::set(const std::string& key, bool value) {
    set(key, std::string(value ? "true" : "false"));
}

const ReportNode* ReportNode::find(const std::string& path) const {
    const ReportNode* node = this;
    std::size_t begin = 0;
    while (begin <= path.size()) {
        const std::size_t dot = path.find('.', begin);
        const std::string part = path.substr(begin, dot == std::string::npos ? dot : dot - begin);
        const ReportNode* next = nullptr;
        for (const auto& child : node->children_) {
            if (child.key_ == part) {
                next = &child;
                break;
            }
        }
        if (!next) return nullptr;
        node = next;
        if (dot == std::string::npos) return node;
        begin = dot + 1;
    }
    return nullptr;
}

void ReportNode::write_at(std::ostream& os, int depth) const {
    for (int i = 0; i < depth; ++i) os << "  ";
    os << key_;
    if (leaf_) os << ": " << value_;
    os << '\n';
    for (const auto& child : children_) child.write_at(os, depth + 1);
}

void ReportNode::write(std::ostream& os) const {
    for (const auto& child : children_) child.write_at(os, 0);
}

std::string ReportNode::to_string() const {
    std::ostringstream os;
    write(os);
    return os.str();
}

ReportNode ReportNode::parse(const std::string& text) {
    ReportNode root;
    std::vector<ReportNode*> stack{&root};

    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;

        std::size_t spaces = 0;
        while (spaces < line.size() && line[spaces] == ' ') ++spaces;
        if (spaces % 2 != 0)
            throw ParseError("odd indentation in report", lineno);
        const std::size_t depth = spaces / 2;
        if (depth + 1 > stack.size())
            throw ParseError("indentation jumps a level in report", lineno);
        stack.resize(depth + 1);

        ReportNode node;
        const std::string body = line.substr(spaces);
        const std::size_t colon = body.find(": ");
        if (colon == std::string::npos) {
            node.key_ = body;
        } else {
            node.key_ = body.substr(0, colon);
            node.value_ = body.substr(colon + 2);
            node.leaf_ = true;
        }

        auto& siblings = stack.back()->children_;
        siblings.push_back(std::move(node));
        stack.push_back(&siblings.back());
    }
    return root;
}

namespace {

bool parse_number(const std::string& text, double& out) {
    if (text.empty()) return false;
    char* end = nullptr;
    out = std::strtod(text.c_str(), &end);
    return end == text.c_str() + text.size();
}

bool skipped(const std::string& key, std::span<const std::string> skip_keys) {
    for (const auto& s : skip_keys)
        if (s == key) return true;
    return false;
}

void compare_nodes(const ReportNode& a, const ReportNode& b, double tol,
                   std::span<const std::string> skip_keys, const std::string& path,
                   ReportDiff& diff) {
    if (!diff.equal) return;
    if (a.key() != b.key()) {
        diff = {false, "key mismatch at " + path + ": " + a.key() + " vs " + b.key()};
        return;
    }
    const std::string here = path.empty() ? a.key() : path + "." + a.key();
    if (skipped(a.key(), skip_keys)) return;

    if (a.is_leaf() != b.is_leaf()) {
        diff = {false, "leaf/section mismatch at " + here};
        return;
    }
    if (a.is_leaf()) {
        double x = 0.0;
        double y = 0.0;
        if (parse_number(a.value(), x) && parse_number(b.value(), y)) {
            if (!(std::abs(x - y) <= tol))
                diff = {false, "numeric mismatch at " + here + ": " + a.value() + " vs " + b.value()};
        } else if (a.value() != b.value()) {
            diff = {false, "value mismatch at " + here + ": " + a.value() + " vs " + b.value()};
        }
        return;
    }
    if (a.children().size() != b.children().size()) {
        diff = {false, "child count mismatch at " + here};
        return;
    }
    for (std::size_t i = 0; i < a.children().size(); ++i)
        compare_nodes(a.children()[i], b.children()[i], tol, skip_keys, here, diff);
}

}  // namespace

ReportDiff compare_reports(const ReportNode& a, const ReportNode& b, double tol,
                           std::span<const std::string> skip_keys) {
    ReportDiff diff;
    if (a.children().size() != b.children().size()) return {false, "top-level child count differs"};
    for (std::size_t i = 0; i < a.children().size(); ++i)
        compare_nodes(a.children()[i], b.children()[i], tol, skip_keys, "", diff);
    return diff;
}

}  // namespace itrp
