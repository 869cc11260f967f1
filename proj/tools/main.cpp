#include "cli_parse.hpp"

int main(int argc, char** argv) {
    return rkhs_sparse::tool::main_entry(argc, argv);
}
