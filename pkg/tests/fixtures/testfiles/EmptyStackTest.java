import org.junit.Test;
import static org.junit.Assert.*;

public class EmptyStackTest {
    @Test(expected = IllegalStateException.class)
    public void popThrows() {
        new Stack<Integer>().pop();
    }
}
