#include "frim/frim.hpp"
int main() { return 0; }
