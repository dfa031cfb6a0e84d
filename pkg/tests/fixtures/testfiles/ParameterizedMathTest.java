package math;

import org.junit.jupiter.params.ParameterizedTest;
import org.junit.jupiter.params.provider.CsvSource;
import org.junit.jupiter.api.Test;

import static org.junit.jupiter.api.Assertions.assertEquals;

class ParameterizedMathTest {

    @ParameterizedTest
    @CsvSource({"1, 1, 2", "2, 3, 5"})
    void adds(int a, int b, int sum) {
        assertEquals(sum, MathUtil.add(a, b));
    }

    @Test
    void testAbs() {
        assertEquals(3, MathUtil.abs(-3));
    }

    @Test
    void testMax() throws Exception {
        int[] values = {1, 5, 3};
        assertEquals(5, MathUtil.max(values));
    }
}
