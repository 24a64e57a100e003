#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace commeval {

// Base for every failure rooted in the data or the environment rather than
// in how a tool was invoked. The CLI maps these to exit code 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Two corpora that must be joined on id do not carry the same id set.
class IdMismatchError : public Error {
 public:
  IdMismatchError(std::vector<std::string> only_left, std::vector<std::string> only_right);

  const std::vector<std::string>& only_in_left() const { return only_left_; }
  const std::vector<std::string>& only_in_right() const { return only_right_; }

 private:
  std::vector<std::string> only_left_;
  std::vector<std::string> only_right_;
};

// An external scoring or generation backend failed while handling `item_id`.
class BackendError : public Error {
 public:
  BackendError(std::string item_id, const std::string& what);

  const std::string& item_id() const { return item_id_; }

 private:
  std::string item_id_;
};

}  // namespace commeval
