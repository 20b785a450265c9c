#include "shapelift/shapelift.hpp"
int main() { return 0; }
